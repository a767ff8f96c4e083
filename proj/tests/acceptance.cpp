// Acceptance run: one PASS/FAIL line per criterion. Study sizes default to
// the desk scale (5000 replications); --reps shrinks them for quick checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rdflex/bandwidth.hpp"
#include "rdflex/error.hpp"
#include "rdflex/fuzzy.hpp"
#include "rdflex/inference.hpp"
#include "rdflex/kernels.hpp"
#include "rdflex/log.hpp"
#include "rdflex/pipeline.hpp"
#include "rdflex/simulate.hpp"

namespace {

using namespace rdflex;
using Eigen::VectorXd;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    std::printf("[%s] %d %s: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

EstimatorSpec est(const std::string& label, const std::string& adjuster,
                  const std::string& bandwidth = "auto-ba", CiMethod ci = CiMethod::bias_aware) {
    EstimatorSpec e;
    e.label = label;
    e.config.adjuster = adjuster;
    e.config.bandwidth = parse_bandwidth(bandwidth);
    e.config.ci = ci;
    return e;
}

SimStudySpec hermite_study(int L, int reps, int threads, std::uint64_t seed) {
    SimStudySpec s;
    s.dgp.L = L;
    s.n = 2000;
    s.reps = reps;
    s.threads = threads;
    s.seed = seed;
    return s;
}

double secs_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void criterion_1_and_4(int reps, int threads) {
    SimStudySpec s = hermite_study(0, reps, threads, 101);
    s.estimators = {est("nocov", "zero"),
                    est("rbc", "zero", "auto-mse", CiMethod::rbc),
                    est("us", "zero", "undersmooth", CiMethod::undersmoothing)};
    const SimStudyResult r = run_study(s);
    const CellResult& c = r.cell("nocov");
    const double bias = 100 * std::abs(c.bias), sd = 100 * c.sd, cov = 100 * c.coverage;
    const double len = 100 * c.avg_ci_length, h = 100 * c.avg_h;
    const bool ok1 = within(bias, 3.69, 0.4) && within(sd, 7.49, 0.4) && within(cov, 94.90, 1.0) &&
                     within(len, 32.58, 1.0) && within(h, 43.20, 1.0) && c.failures == 0;
    report(1, ok1, "L=0 no covariates",
           fmt("|bias| %.2f (3.69+-0.4) sd %.2f (7.49+-0.4) coverage %.2f (94.90+-1.0) "
               "length %.2f (32.58+-1.0) h %.2f (43.20+-1.0), bias sign %s, %d reps",
               bias, sd, cov, len, h, c.bias < 0 ? "negative" : "positive", c.ok));

    const CellResult& rbc = r.cell("rbc");
    const CellResult& us = r.cell("us");
    const double shrink = std::pow(static_cast<double>(s.n), -1.0 / 20.0);
    int exact = 0;
    for (std::size_t i = 0; i < rbc.h.size(); ++i) exact += us.h[i] == rbc.h[i] * shrink;
    const bool ok4 = within(100 * rbc.avg_h, 29.78, 1.5) && within(100 * us.avg_h, 20.36, 1.5) &&
                     exact == static_cast<int>(rbc.h.size());
    report(4, ok4, "L=0 bandwidth consistency",
           fmt("MSE h %.2f (29.78+-1.5) undersmoothed h %.2f (20.36+-1.5), "
               "h_us == h_mse n^(-1/20) in %d/%zu runs",
               100 * rbc.avg_h, 100 * us.avg_h, exact, rbc.h.size()));
}

void criterion_2(int reps, int threads) {
    SimStudySpec s = hermite_study(16, reps, threads, 102);
    s.estimators = {est("nocov", "zero"), est("oracle", "oracle")};
    const SimStudyResult r = run_study(s);
    const CellResult& n = r.cell("nocov");
    const CellResult& o = r.cell("oracle");
    const double sd_ratio = o.sd / n.sd;
    const double len_ratio = o.avg_ci_length / n.avg_ci_length;
    report(2, within(sd_ratio, 0.378, 0.06) && within(len_ratio, 0.381, 0.06),
           "L=16 variance reduction",
           fmt("sd ratio %.3f (0.378+-0.06) length ratio %.3f (0.381+-0.06); sd x100 %.2f / %.2f",
               sd_ratio, len_ratio, 100 * o.sd, 100 * n.sd));
}

void criterion_3(int reps, int threads) {
    SimStudySpec s;
    s.dgp.kind = DgpSpec::Kind::crossfit_demo;
    s.dgp.d = 50;
    s.n = 1000;
    s.reps = reps;
    s.threads = threads;
    s.seed = 103;
    s.estimators = {est("nocf", "linear-nocf", "auto-mse", CiMethod::rbc),
                    est("cf", "linear-cf", "auto-mse", CiMethod::rbc)};
    const SimStudyResult r = run_study(s);
    const double nocf = 100 * r.cell("nocf").coverage;
    const double cf = 100 * r.cell("cf").coverage;
    report(3, nocf <= 88.0 && cf >= 93.0, "d=50 irrelevant covariates, RBC coverage",
           fmt("without cross-fitting %.2f (<= 88) with cross-fitting %.2f (>= 93)", nocf, cf));
}

// Each property returns an empty string on success, otherwise what failed.
std::string properties() {
    std::string bad;
    auto need = [&](bool ok, const char* name) {
        if (!ok) bad += std::string(bad.empty() ? "" : ", ") + name;
    };
    const Kernel tri{KernelKind::triangular}, uni{KernelKind::uniform};

    {
        Stream rng(1, "acceptance-exactness");
        double worst = 0.0;
        for (int design = 0; design < 200; ++design) {
            const Index n = 80 + static_cast<Index>(rng.below(200));
            VectorXd x(n);
            for (Index i = 0; i < n; ++i) x(i) = rng.uniform(-2.0, 2.0);
            const double h = rng.uniform(0.8, 2.0);
            const Kernel& k = design % 2 ? uni : tri;
            for (int p = 1; p <= 4; ++p) {
                for (int v = 0; v <= p; ++v) {
                    for (Side side : {Side::plus, Side::minus}) {
                        const auto w = local_poly_weights(x, k, h, p, v, side);
                        for (int j = 0; j <= p; ++j) {
                            double sum = 0.0;
                            for (Index i = 0; i < n; ++i) sum += w.w(i) * std::pow(x(i), j);
                            worst = std::max(worst, std::abs(sum - (j == v)) * std::pow(h, v - j));
                        }
                    }
                }
            }
        }
        need(worst < 1e-8, "polynomial exactness");
    }

    Stream rng(2, "acceptance-data");
    const Index n = 600;
    Dataset d;
    d.x.resize(n);
    d.y.resize(n);
    d.z.resize(n, 2);
    for (Index i = 0; i < n; ++i) {
        d.x(i) = rng.uniform(-1.0, 1.0);
        d.z(i, 0) = rng.normal();
        d.z(i, 1) = rng.normal();
        d.y(i) = (d.x(i) >= 0) + d.x(i) + 0.5 * d.z(i, 0) + 0.5 * rng.normal();
    }
    const auto data = std::make_shared<const Dataset>(d);
    const NearestNeighbors nn(d.x);
    {
        const auto folds = assign_folds(n, 5, 3);
        const RdFit base = local_fit(d.x, d.y, tri, 0.5, 1, 0, nn);
        const auto adj = adjust(data, folds, fit_adjusters(d, folds, ConstantAdjuster(7.0), {}, Column::y, 1));
        const RdFit c = estimate_dml2(adj, tri, 0.5, 1, nn);
        need(std::abs(c.tau_hat - base.tau_hat) < 1e-9, "constant-adjustment invariance");

        EstimatorConfig cfg;
        const SharpResult zero = estimate_sharp(data, cfg, 5);
        const RdFit direct = fit_with_ci(d.x, d.y, cfg, select_bandwidth(d.x, d.y, cfg, nn).h, nn);
        need(std::memcmp(&zero.fit.tau_hat, &direct.tau_hat, sizeof(double)) == 0 &&
                 std::memcmp(&zero.fit.se, &direct.se, sizeof(double)) == 0,
             "zero adjustment equals baseline");
    }
    {
        const auto u = nu_bar_kappa_bar(uni);
        const auto t = nu_bar_kappa_bar(tri);
        need(std::abs(u.nu_bar + 1.0 / 6.0) < 1e-10 && std::abs(u.kappa_bar - 4.0) < 1e-10 &&
                 std::abs(t.nu_bar + 0.1) < 1e-10,
             "kernel constants");
        need(std::abs(z_crit(0.05, 0.0) - 1.959964) < 1e-6 &&
                 std::abs(z_crit(0.05, 30.0) - 30.0 - 1.644854) < 1e-6,
             "critical values");
    }
    {
        VectorXd x(6), m(6);
        x << 0.1, 0.2, 0.3, -0.1, -0.2, -0.3;
        m << 1.0, 2.0, 4.0, 0.0, 0.0, 0.0;
        NnVarianceConfig c;
        c.R = 2;
        c.dof_correction = false;
        need(nn_sigma2(x, m, c)(0) == 4.0, "nearest-neighbor hand example");
    }
    {
        VectorXd quad(n);
        for (Index i = 0; i < n; ++i) quad(i) = (d.x(i) >= 0) + 3.0 * d.x(i) * d.x(i) - d.x(i);
        need(std::abs(ci_rbc(d.x, quad, tri, 0.6, 0.05, nn).tau_hat - 1.0) < 1e-9, "RBC exactness");
    }
    {
        const VectorXd t = (d.x.array() >= 0.0).cast<double>();
        const FuzzyFit f = fuzzy_from_adjusted(d.x, d.y, t, tri, 0.5, 1, nn);
        const RdFit s = local_fit(d.x, d.y, tri, 0.5, 1, 0, nn);
        need(std::abs(f.theta_hat - s.tau_hat) < 1e-9 && std::abs(f.se - s.se) < 1e-9,
             "fuzzy sharp reduction");
    }
    {
        SimStudySpec s = hermite_study(4, 16, 1, 7);
        s.n = 500;
        s.estimators = {est("nocov", "zero"), est("lasso", "lasso")};
        const SimStudyResult a = run_study(s);
        s.threads = 8;
        const SimStudyResult b = run_study(s);
        bool same = true;
        for (std::size_t e = 0; e < a.cells.size(); ++e) {
            const auto& x = a.cells[e].estimate;
            same &= std::memcmp(x.data(), b.cells[e].estimate.data(), x.size() * sizeof(double)) == 0;
        }
        need(same, "thread reproducibility");
    }
    return bad;
}

void criterion_5() {
    const auto t0 = std::chrono::steady_clock::now();
    std::string bad;
    try {
        bad = properties();
    } catch (const std::exception& e) {
        bad = std::string("exception: ") + e.what();
    }
    const double secs = secs_since(t0);
    report(5, bad.empty() && secs < 60.0, "property suite",
           bad.empty() ? fmt("9 properties hold, %.1f s (< 60)", secs)
                       : fmt("failed: %s (%.1f s)", bad.c_str(), secs));
}

void criterion_6(int reps, int threads) {
    SimStudySpec s = hermite_study(4, reps, threads, 106);
    s.estimators = {est("lasso", "lasso"), est("oracle_limit", "oracle-limit"),
                    est("oracle", "oracle")};
    const SimStudyResult r = run_study(s);
    const double ks = emit_ecdf(r, "lasso", "oracle_limit").ks;
    const double ks_opt = emit_ecdf(r, "lasso", "oracle").ks;
    report(6, ks < 0.05, "L=4 lasso vs infeasible estimator",
           fmt("KS %.4f (< 0.05) against the first-stage limit; %.4f against the optimal "
               "adjustment; sd x100 %.2f / %.2f / %.2f (lasso / limit / optimal)",
               ks, ks_opt, 100 * r.cell("lasso").sd, 100 * r.cell("oracle_limit").sd,
               100 * r.cell("oracle").sd));
}

void criterion_7(int datasets) {
    DgpSpec spec;
    const Kernel tri{KernelKind::triangular};
    const Index n = 8000;
    const double target = hermite_h_amse(tri, spec, n).h;
    double sum = 0.0;
    for (int r = 0; r < datasets; ++r) {
        const Dataset d = gen_hermite(n, spec, Stream(107, "bandwidth", r).bits());
        sum += select_cct_mse(d.x, d.y, tri).h;
    }
    const double ratio = sum / datasets / target;
    report(7, ratio >= 0.7 && ratio <= 1.4, "MSE bandwidth vs analytic h_AMSE",
           fmt("mean h %.4f, h_AMSE %.4f, ratio %.3f (in [0.7, 1.4]) over %d datasets at n=8000",
               sum / datasets, target, ratio, datasets));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rdflex acceptance criteria"};
    int reps = 5000;
    int threads = 0;
    int datasets = 200;
    std::vector<int> only;
    app.add_option("--reps", reps, "replications per simulation study");
    app.add_option("--threads", threads, "worker threads (0: all cores)");
    app.add_option("--datasets", datasets, "datasets for the bandwidth check");
    app.add_option("--only", only, "run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    set_warnings_enabled(false);
    auto want = [&](int id) { return only.empty() || std::count(only.begin(), only.end(), id); };
    const std::vector<std::pair<std::vector<int>, std::function<void()>>> steps{
        {{5}, [] { criterion_5(); }},
        {{7}, [&] { criterion_7(datasets); }},
        {{1, 4}, [&] { criterion_1_and_4(reps, threads); }},
        {{2}, [&] { criterion_2(reps, threads); }},
        {{3}, [&] { criterion_3(reps, threads); }},
        {{6}, [&] { criterion_6(reps, threads); }},
    };
    for (const auto& [ids, step] : steps) {
        bool any = false;
        for (int id : ids) any |= want(id);
        if (!any) continue;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            step();
        } catch (const std::exception& e) {
            for (int id : ids) report(id, false, "error", e.what());
        }
        std::fprintf(stderr, "  (criteria");
        for (int id : ids) std::fprintf(stderr, " %d", id);
        std::fprintf(stderr, ": %.1f s)\n", secs_since(t0));
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
