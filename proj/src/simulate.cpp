#include "rdflex/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "rdflex/error.hpp"
#include "rdflex/log.hpp"

namespace rdflex {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double phi_x(double x) {
    const double s = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    return s * (x * x + 0.5 * x);
}

// E He_k(U), U ~ U(-1, 1), from the monomial coefficients of He_k.
double he_uniform_mean(int k) {
    std::vector<double> prev{1.0}, cur{0.0, 1.0};
    if (k == 0) return 1.0;
    for (int j = 1; j < k; ++j) {
        std::vector<double> next(cur.size() + 1, 0.0);
        for (std::size_t m = 0; m < cur.size(); ++m) next[m + 1] += cur[m];
        for (std::size_t m = 0; m < prev.size(); ++m) next[m] -= j * prev[m];
        prev = std::move(cur);
        cur = std::move(next);
    }
    double e = 0.0;
    for (std::size_t m = 0; m < cur.size(); m += 2) e += cur[m] / static_cast<double>(m + 1);
    return e;
}

double sum_term_means(const DgpSpec& spec) {
    double s = 0.0;
    for (const auto& a : hermite_multi_indices(4, spec.L)) s += hermite_term_mean(a);
    return s;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double pop_sd(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

HermiteShape parse_hermite_shape(const std::string& s) {
    if (s == "scaled") return HermiteShape::scaled;
    if (s == "literal") return HermiteShape::literal;
    if (s == "additive") return HermiteShape::additive;
    throw InvalidArgument("simulate", "unknown Hermite design shape '" + s + "'");
}

std::string to_string(HermiteShape s) {
    switch (s) {
    case HermiteShape::scaled: return "scaled";
    case HermiteShape::literal: return "literal";
    case HermiteShape::additive: return "additive";
    }
    return "?";
}

Dataset gen_crossfit_demo(Index n, int d, std::uint64_t seed) {
    if (d < 0) throw InvalidArgument("simulate", "d must be >= 0");
    Stream rng(seed, "crossfit-demo");
    Dataset data;
    data.x.resize(n);
    data.y.resize(n);
    data.z.resize(n, d);
    for (Index i = 0; i < n; ++i) {
        data.x(i) = rng.uniform(-std::numbers::pi, std::numbers::pi);
        data.y(i) = std::sin(data.x(i)) + rng.normal();
        for (int j = 0; j < d; ++j) data.z(i, j) = rng.normal();
    }
    for (int j = 0; j < d; ++j) data.z_names.push_back("z" + std::to_string(j + 1));
    return data;
}

double hermite_term_mean(const std::vector<int>& a) {
    double m = 1.0;
    for (int k : a) m *= he_uniform_mean(k);
    return m;
}

VectorXd hermite_index(const MatrixXd& z, const DgpSpec& spec) {
    VectorXd g = VectorXd::Zero(z.rows());
    if (spec.L <= 0) return g;
    const auto idx = hermite_multi_indices(static_cast<int>(z.cols()), spec.L);
    const MatrixXd b = hermite_basis(z, spec.L);
    for (std::size_t l = 0; l < idx.size(); ++l) {
        g += b.col(static_cast<Index>(l));
        if (spec.center) g.array() -= hermite_term_mean(idx[l]);
    }
    g += 0.25 * z.rowwise().sum();
    return g;
}

Dataset gen_hermite(Index n, const DgpSpec& spec, std::uint64_t seed) {
    if (spec.L != 0 && spec.L != 4 && spec.L != 16) {
        throw InvalidArgument("simulate", "L must be 0, 4 or 16");
    }
    Stream rng(seed, "hermite");
    Dataset data;
    data.x.resize(n);
    data.y.resize(n);
    data.z.resize(n, 4);
    VectorXd eps(n);
    for (Index i = 0; i < n; ++i) {
        data.x(i) = rng.uniform(-1.0, 1.0);
        for (int j = 0; j < 4; ++j) data.z(i, j) = rng.uniform(-1.0, 1.0);
        eps(i) = spec.noise_sd * rng.normal();
    }
    const VectorXd g = hermite_index(data.z, spec);
    for (Index i = 0; i < n; ++i) {
        const double x = data.x(i);
        const double t = x >= 0.0 ? 1.0 : 0.0;
        const double px = phi_x(x);
        double cov = 0.0;
        if (spec.L > 0) {
            switch (spec.shape) {
            case HermiteShape::scaled: cov = (1.0 + px) * g(i); break;
            case HermiteShape::literal: cov = (px + t) * g(i); break;
            case HermiteShape::additive: cov = g(i); break;
            }
        }
        data.y(i) = t + px + cov + eps(i);
    }
    data.z_names = {"z1", "z2", "z3", "z4"};
    return data;
}

Dataset gen_hermite(Index n, int L, std::uint64_t seed) {
    DgpSpec spec;
    spec.L = L;
    return gen_hermite(n, spec, seed);
}

Dataset generate(const DgpSpec& spec, Index n, std::uint64_t seed) {
    if (spec.kind == DgpSpec::Kind::crossfit_demo) return gen_crossfit_demo(n, spec.d, seed);
    return gen_hermite(n, spec, seed);
}

EtaFn oracle_eta(const DgpSpec& spec) {
    if (spec.kind == DgpSpec::Kind::crossfit_demo) {
        return [](const MatrixXd& z) { return VectorXd::Zero(z.rows()).eval(); };
    }
    return [spec](const MatrixXd& z) -> VectorXd {
        const VectorXd g = hermite_index(z, spec);
        if (spec.L > 0 && spec.shape == HermiteShape::literal) {
            return ((1.0 + g.array()) / 2.0).matrix();
        }
        return (0.5 + g.array()).matrix();
    };
}

EtaFn oracle_adjustment(const DgpSpec& spec) {
    if (spec.kind == DgpSpec::Kind::crossfit_demo) return oracle_eta(spec);
    return [spec](const MatrixXd& z) -> VectorXd {
        const VectorXd g = hermite_index(z, spec);
        if (spec.L > 0 && spec.shape == HermiteShape::literal) return g / 2.0;
        return g;
    };
}

EtaFn localized_limit(const DgpSpec& spec, double b) {
    if (spec.kind == DgpSpec::Kind::crossfit_demo) return oracle_adjustment(spec);
    // mean of phi_X over [0, c) is c^2/3 + c/4 and over (-c, 0) is -c^2/3 + c/4
    const double c = std::min(std::abs(b), 1.0);
    double coef = 1.0;
    if (spec.L > 0 && spec.shape == HermiteShape::scaled) coef = 1.0 + c / 4.0;
    if (spec.L > 0 && spec.shape == HermiteShape::literal) coef = 0.5 + c / 4.0;
    return [spec, coef](const MatrixXd& z) -> VectorXd { return coef * hermite_index(z, spec); };
}

OracleAdjustments oracle_adjustments(const DgpSpec& spec) {
    return {oracle_adjustment(spec), [spec](double b) { return localized_limit(spec, b); }};
}

double true_tau(const DgpSpec& spec) {
    if (spec.kind == DgpSpec::Kind::crossfit_demo) return 0.0;
    if (spec.L > 0 && spec.shape == HermiteShape::literal && !spec.center) {
        return 1.0 + sum_term_means(spec);
    }
    return 1.0;
}

double population_smoothness(const DgpSpec& spec) {
    if (spec.kind == DgpSpec::Kind::crossfit_demo) return 1.0;
    if (spec.L > 0 && spec.shape != HermiteShape::additive && !spec.center) {
        return 2.0 * std::abs(1.0 + sum_term_means(spec));
    }
    return 2.0;
}

HAmse hermite_h_amse(const Kernel& k, const DgpSpec& spec, Index n) {
    if (spec.kind != DgpSpec::Kind::hermite || spec.L != 0) {
        throw InvalidArgument("simulate", "h_AMSE is tabulated for the L = 0 design only");
    }
    const auto [nu_bar, kappa_bar] = nu_bar_kappa_bar(k);
    const double s2 = spec.noise_sd * spec.noise_sd;
    HAmse out;
    out.V = kappa_bar * (s2 + s2) / 0.5;   // density of X at 0 is 1/2
    out.B = 0.5 * nu_bar * (2.0 - (-2.0));  // m''(0+) = 2, m''(0-) = -2
    out.h = std::pow(out.V / (4.0 * out.B * out.B), 0.2) * std::pow(static_cast<double>(n), -0.2);
    return out;
}

const CellResult& SimStudyResult::cell(const std::string& label) const {
    for (const auto& c : cells) {
        if (c.label == label) return c;
    }
    throw InvalidArgument("simulate", "no estimator labelled '" + label + "'");
}

void summarize(CellResult& c, double tau) {
    std::vector<double> est, len, h, se;
    int covered = 0;
    c.failures = 0;
    for (std::size_t r = 0; r < c.estimate.size(); ++r) {
        if (std::isnan(c.estimate[r])) {
            ++c.failures;
            continue;
        }
        est.push_back(c.estimate[r]);
        len.push_back(c.ci_hi[r] - c.ci_lo[r]);
        h.push_back(c.h[r]);
        se.push_back(c.se[r]);
        if (c.ci_lo[r] <= tau && tau <= c.ci_hi[r]) ++covered;
    }
    c.ok = static_cast<int>(est.size());
    if (c.ok == 0) return;
    const double k = c.ok;
    const double m = mean_of(est);
    c.bias = m - tau;
    c.sd = pop_sd(est);
    c.rmse = std::sqrt(c.bias * c.bias + c.sd * c.sd);
    c.coverage = covered / k;
    c.avg_ci_length = mean_of(len);
    c.avg_h = mean_of(h);
    c.avg_se = mean_of(se);
    c.mc_se_bias = c.sd / std::sqrt(k);
    c.mc_se_sd = c.ok > 1 ? c.sd / std::sqrt(2.0 * (k - 1.0)) : 0.0;
    c.mc_se_coverage = std::sqrt(c.coverage * (1.0 - c.coverage) / k);
    c.mc_se_length = pop_sd(len) / std::sqrt(k);
    c.mc_se_h = pop_sd(h) / std::sqrt(k);
}

SimStudyResult run_study(const SimStudySpec& spec) {
    if (spec.reps < 1) throw InvalidArgument("simulate", "reps must be >= 1");
    if (spec.estimators.empty()) throw InvalidArgument("simulate", "no estimators configured");
    for (const auto& e : spec.estimators) validate(e.config);

    SimStudyResult res;
    res.spec = spec;
    res.tau = true_tau(spec.dgp);
    const auto E = spec.estimators.size();
    const auto R = static_cast<std::size_t>(spec.reps);
    res.cells.resize(E);
    for (std::size_t e = 0; e < E; ++e) {
        auto& c = res.cells[e];
        c.label = spec.estimators[e].label;
        for (auto* v : {&c.estimate, &c.se, &c.ci_lo, &c.ci_hi, &c.h}) v->assign(R, kNaN);
    }
    const OracleAdjustments oracle = oracle_adjustments(spec.dgp);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t r = next++; r < R; r = next++) {
            const auto data = std::make_shared<const Dataset>(
                generate(spec.dgp, spec.n, Stream(spec.seed, "data", r).bits()));
            const std::uint64_t rep_seed = Stream(spec.seed, "replication", r).bits();
            for (std::size_t e = 0; e < E; ++e) {
                try {
                    const SharpResult s =
                        estimate_sharp(data, spec.estimators[e].config, rep_seed, &oracle);
                    auto& c = res.cells[e];
                    c.estimate[r] = s.fit.tau_hat;
                    c.se[r] = s.fit.se;
                    c.h[r] = s.fit.h;
                    c.ci_lo[r] = s.fit.ci ? s.fit.ci->lo : kNaN;
                    c.ci_hi[r] = s.fit.ci ? s.fit.ci->hi : kNaN;
                } catch (const Error&) {
                    // left as NaN and counted as a failure
                }
            }
        }
    };

    const bool warn_before = warnings_enabled();
    set_warnings_enabled(false);
    int threads = spec.threads > 0 ? spec.threads
                                   : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), R));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    set_warnings_enabled(warn_before);

    for (auto& c : res.cells) {
        summarize(c, res.tau);
        if (c.failures > spec.max_failure_rate * spec.reps) {
            throw StudyAborted("simulate", c.label + ": " + std::to_string(c.failures) + " of " +
                                               std::to_string(spec.reps) + " replications failed");
        }
    }
    return res;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::erase_if(a, [](double v) { return std::isnan(v); });
    std::erase_if(b, [](double v) { return std::isnan(v); });
    if (a.empty() || b.empty()) return kNaN;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() || j < b.size()) {
        double v;
        if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
            v = a[i];
        } else {
            v = b[j];
        }
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return d;
}

Ecdf emit_ecdf(const SimStudyResult& result, const std::string& a, const std::string& b) {
    std::vector<double> va, vb;
    for (double v : result.cell(a).estimate) {
        if (!std::isnan(v)) va.push_back(v);
    }
    for (double v : result.cell(b).estimate) {
        if (!std::isnan(v)) vb.push_back(v);
    }
    Ecdf out;
    out.ks = ks_distance(va, vb);
    std::sort(va.begin(), va.end());
    std::sort(vb.begin(), vb.end());
    std::vector<double> pooled(va);
    pooled.insert(pooled.end(), vb.begin(), vb.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
    for (double v : pooled) {
        const auto fa = std::upper_bound(va.begin(), va.end(), v) - va.begin();
        const auto fb = std::upper_bound(vb.begin(), vb.end(), v) - vb.begin();
        out.rows.push_back({v, va.empty() ? kNaN : fa / static_cast<double>(va.size()),
                            vb.empty() ? kNaN : fb / static_cast<double>(vb.size())});
    }
    return out;
}

std::string format_table(const SimStudyResult& result) {
    std::size_t w = 9;
    for (const auto& c : result.cells) w = std::max(w, c.label.size());
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s %8s %8s %8s %9s %10s %8s %6s\n", static_cast<int>(w),
                  "estimator", "bias", "sd", "rmse", "coverage", "ci_length", "h", "fail");
    os << buf;
    for (const auto& c : result.cells) {
        std::snprintf(buf, sizeof buf, "%-*s %8.2f %8.2f %8.2f %9.2f %10.2f %8.2f %6d\n",
                      static_cast<int>(w), c.label.c_str(), 100 * c.bias, 100 * c.sd,
                      100 * c.rmse, 100 * c.coverage, 100 * c.avg_ci_length, 100 * c.avg_h,
                      c.failures);
        os << buf;
    }
    return os.str();
}

std::string format_csv(const SimStudyResult& result) {
    std::ostringstream os;
    os << "estimator,ok,failures,bias,sd,rmse,coverage,avg_ci_length,avg_h,avg_se,"
          "mc_se_bias,mc_se_sd,mc_se_coverage,mc_se_length,mc_se_h\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& c : result.cells) {
        os << c.label << ',' << c.ok << ',' << c.failures;
        for (double v : {c.bias, c.sd, c.rmse, c.coverage, c.avg_ci_length, c.avg_h, c.avg_se,
                         c.mc_se_bias, c.mc_se_sd, c.mc_se_coverage, c.mc_se_length, c.mc_se_h}) {
            os << ',' << num(v);
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace rdflex
