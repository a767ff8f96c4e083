#include "rdflex/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <tuple>

#include "rdflex/error.hpp"

namespace rdflex {

std::string to_string(CiMethod m) {
    switch (m) {
    case CiMethod::undersmoothing: return "us";
    case CiMethod::rbc: return "rbc";
    case CiMethod::bias_aware: return "ba";
    }
    return "?";
}

CiMethod parse_ci_method(const std::string& s) {
    if (s == "us" || s == "undersmoothing") return CiMethod::undersmoothing;
    if (s == "rbc") return CiMethod::rbc;
    if (s == "ba" || s == "bias_aware") return CiMethod::bias_aware;
    throw InvalidArgument("inference", "unknown CI method '" + s + "'");
}

NearestNeighbors::NearestNeighbors(const Eigen::VectorXd& x, NnVarianceConfig cfg)
    : R_(cfg.R),
      scale_(cfg.dof_correction ? cfg.R / (cfg.R + 1.0) : 1.0),
      nbrs_(static_cast<std::size_t>(x.size())) {
    if (R_ < 1) throw InvalidArgument("inference", "neighbor count R must be >= 1");
    for (const bool plus : {true, false}) {
        std::vector<Index> side;
        for (Index i = 0; i < x.size(); ++i) {
            if ((x(i) >= 0.0) == plus) side.push_back(i);
        }
        if (side.empty()) continue;
        if (static_cast<int>(side.size()) < R_ + 1) {
            throw InsufficientNeighbors("inference", "fewer than R+1 observations on the " +
                                                         std::string(plus ? "plus" : "minus") +
                                                         " side");
        }
        std::sort(side.begin(), side.end(), [&](Index a, Index b) {
            return std::tie(x(a), a) < std::tie(x(b), b);
        });
        const auto m = static_cast<std::ptrdiff_t>(side.size());
        std::vector<std::pair<double, Index>> cand;
        for (std::ptrdiff_t pos = 0; pos < m; ++pos) {
            const Index i = side[pos];
            cand.clear();
            // R closest positions in each direction, extended while the
            // distance ties the last one taken so the index tie-break is exact.
            for (const int dir : {-1, 1}) {
                double last = -1.0;
                int taken = 0;
                for (std::ptrdiff_t q = pos + dir; q >= 0 && q < m; q += dir) {
                    const double d = std::abs(x(side[q]) - x(i));
                    if (taken >= R_ && d != last) break;
                    cand.emplace_back(d, side[q]);
                    last = d;
                    ++taken;
                }
            }
            std::partial_sort(cand.begin(), cand.begin() + R_, cand.end());
            auto& out = nbrs_[i];
            out.resize(R_);
            for (int r = 0; r < R_; ++r) out[r] = cand[r].second;
        }
    }
}

Eigen::VectorXd NearestNeighbors::sigma2(const Eigen::VectorXd& outcome) const {
    Eigen::VectorXd s(outcome.size());
    for (Index i = 0; i < outcome.size(); ++i) {
        double mean = 0.0;
        for (Index j : nbrs_[i]) mean += outcome(j);
        mean /= R_;
        const double e = outcome(i) - mean;
        s(i) = scale_ * e * e;
    }
    return s;
}

Eigen::VectorXd nn_sigma2(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome,
                          NnVarianceConfig cfg) {
    return NearestNeighbors(x, cfg).sigma2(outcome);
}

double standard_error(const LocalPolyWeights& w, const Eigen::VectorXd& sigma2) {
    return factorial(w.v) * std::sqrt((w.w.array().square() * sigma2.array()).sum());
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double z_crit(double alpha, double r) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidArgument("inference", "alpha must lie in (0, 1)");
    }
    r = std::abs(r);
    // P(|N(r,1)| > q), decreasing in q
    auto tail = [r](double q) { return normal_cdf(r - q) + normal_cdf(-q - r); };
    double lo = 0.0;
    double hi = r + 10.0;
    while (hi - lo > 1e-13 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        (tail(mid) > alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

RdFit local_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome, const Kernel& k,
                double h, int p, int v, const NearestNeighbors& nn) {
    const auto w = local_poly_weights(x, k, h, p, v, Side::jump);
    RdFit fit;
    fit.tau_hat = w.apply(outcome);
    fit.se = standard_error(w, nn.sigma2(outcome));
    fit.h = h;
    fit.p = p;
    fit.v = v;
    fit.n_eff_left = w.n_minus;
    fit.n_eff_right = w.n_plus;
    return fit;
}

ConfidenceInterval ci_undersmoothing(const RdFit& fit, double alpha) {
    const double half = z_crit(alpha, 0.0) * fit.se;
    ConfidenceInterval ci;
    ci.lo = fit.tau_hat - half;
    ci.hi = fit.tau_hat + half;
    ci.level = 1.0 - alpha;
    ci.method = CiMethod::undersmoothing;
    ci.half_length = half;
    return ci;
}

RdFit ci_rbc(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome, const Kernel& k,
             double h, double alpha, const NearestNeighbors& nn) {
    RdFit fit = local_fit(x, outcome, k, h, 2, 0, nn);
    ConfidenceInterval ci = ci_undersmoothing(fit, alpha);
    ci.method = CiMethod::rbc;
    fit.ci = ci;
    return fit;
}

double bias_bound(const LocalPolyWeights& w, const Eigen::VectorXd& x, double smoothness) {
    double s = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        if (w.w(i) == 0.0) continue;
        s += w.w(i) * x(i) * x(i) * (x(i) >= 0.0 ? 1.0 : -1.0);
    }
    return -0.5 * smoothness * s;
}

RdFit ci_bias_aware(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome, const Kernel& k,
                    double h, double alpha, double smoothness, const NearestNeighbors& nn) {
    if (smoothness < 0.0) {
        throw InvalidArgument("inference", "smoothness bound must be nonnegative");
    }
    const auto w = local_poly_weights(x, k, h, 1, 0, Side::jump);
    RdFit fit;
    fit.tau_hat = w.apply(outcome);
    fit.se = standard_error(w, nn.sigma2(outcome));
    fit.h = h;
    fit.p = 1;
    fit.v = 0;
    fit.n_eff_left = w.n_minus;
    fit.n_eff_right = w.n_plus;

    const double b = std::abs(bias_bound(w, x, smoothness));
    const double half = fit.se > 0.0 ? z_crit(alpha, b / fit.se) * fit.se : b;
    ConfidenceInterval ci;
    ci.lo = fit.tau_hat - half;
    ci.hi = fit.tau_hat + half;
    ci.level = 1.0 - alpha;
    ci.method = CiMethod::bias_aware;
    ci.half_length = half;
    ci.bias_bound = b;
    fit.ci = ci;
    return fit;
}

}  // namespace rdflex
