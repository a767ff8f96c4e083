#include "rdflex/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "rdflex/error.hpp"

namespace rdflex {

namespace {

double quantile7(std::vector<double> v, double prob) {
    std::sort(v.begin(), v.end());
    const double pos = prob * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double max_abs(const Eigen::VectorXd& x) { return x.cwiseAbs().maxCoeff(); }

// OLS of the outcome on (1, X, X^2/2!, X^3/3!, X^4/4!) over one side; the
// last coefficient estimates the fourth derivative.
double global_quartic_gamma4(const Eigen::VectorXd& x, const Eigen::VectorXd& y, bool plus) {
    std::vector<Index> rows;
    double scale = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        if ((x(i) >= 0.0) == plus) {
            rows.push_back(i);
            scale = std::max(scale, std::abs(x(i)));
        }
    }
    if (rows.size() < 5) {
        throw InsufficientSupport("bandwidth", "global quartic needs 5 points on the " +
                                                   std::string(plus ? "plus" : "minus") + " side");
    }
    if (!(scale > 0.0)) scale = 1.0;
    const auto m = static_cast<Index>(rows.size());
    Eigen::MatrixXd a(m, 5);
    Eigen::VectorXd b(m);
    for (Index r = 0; r < m; ++r) {
        const double u = x(rows[r]) / scale;
        double pw = 1.0;
        for (int j = 0; j < 5; ++j) {
            a(r, j) = pw / factorial(j);
            pw *= u;
        }
        b(r) = y(rows[r]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < 5) {
        throw SingularDesign("bandwidth", "global quartic design is rank deficient");
    }
    const Eigen::VectorXd coef = qr.solve(b);
    return coef(4) / std::pow(scale, 4);
}

double se2(const LocalPolyWeights& w, const Eigen::VectorXd& sigma2) {
    const double s = standard_error(w, sigma2);
    return s * s;
}

struct BiasAwareEval {
    double value;
    bool ok;
};

}  // namespace

std::string to_string(BandwidthMethod m) {
    switch (m) {
    case BandwidthMethod::cct_mse: return "cct_mse";
    case BandwidthMethod::bias_aware: return "bias_aware";
    case BandwidthMethod::undersmooth: return "undersmooth";
    case BandwidthMethod::fixed: return "fixed";
    }
    return "?";
}

double pilot_v_n(double sd, double iqr, Index n) {
    return 2.58 * std::min(sd, iqr / 1.349) * std::pow(static_cast<double>(n), -0.2);
}

double pilot_v_n(const Eigen::VectorXd& x) {
    const Index n = x.size();
    if (n < 2) throw InvalidArgument("bandwidth", "pilot bandwidth needs at least 2 points");
    const double mean = x.mean();
    const double sd = std::sqrt((x.array() - mean).square().sum() / static_cast<double>(n - 1));
    std::vector<double> v(x.data(), x.data() + n);
    const double iqr = quantile7(v, 0.75) - quantile7(v, 0.25);
    return pilot_v_n(sd, iqr, n);
}

BandwidthSelection select_cct_mse(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome,
                                  const Kernel& k, const NearestNeighbors& nn) {
    const double n = static_cast<double>(x.size());
    CctIntermediates it;
    it.v_n = pilot_v_n(x);
    if (!(it.v_n > 0.0)) {
        throw DegenerateRunning("bandwidth", "running variable has no spread");
    }
    const double cap = max_abs(x);
    const double v_n = std::min(it.v_n, cap);
    const Eigen::VectorXd sigma2 = nn.sigma2(outcome);

    // Step 0: pilot for the third-derivative objects
    it.gamma4_plus = global_quartic_gamma4(x, outcome, true);
    it.gamma4_minus = global_quartic_gamma4(x, outcome, false);
    const double dgamma = it.gamma4_plus - it.gamma4_minus;
    if (std::abs(dgamma) < 1e-12) {
        throw DegenerateCurvature("bandwidth", "fourth-derivative difference is zero");
    }
    const double d33 = factorial(3) * bias_constant(k, 3, 3, Side::plus);
    const double se2_33_v = se2(local_poly_weights(x, k, v_n, 3, 3, Side::jump), sigma2);
    it.C_n = 7.0 * n * std::pow(v_n, 7) * se2_33_v / (2.0 * std::pow(d33 * dgamma, 2));
    it.c_n = std::min(std::pow(it.C_n, 1.0 / 9.0) * std::pow(n, -1.0 / 9.0), cap);

    // Step 1: pilot for the second-derivative jump
    const auto w3p = local_poly_weights(x, k, it.c_n, 3, 3, Side::plus);
    const auto w3m = local_poly_weights(x, k, it.c_n, 3, 3, Side::minus);
    const double beta3_sum = w3p.apply(outcome) + w3m.apply(outcome);
    const double se2_33_c = se2(local_poly_weights(x, k, it.c_n, 3, 3, Side::jump), sigma2);
    const double d22 = factorial(2) * bias_constant(k, 2, 2, Side::plus);
    const double se2_22_v = se2(local_poly_weights(x, k, v_n, 2, 2, Side::jump), sigma2);
    const double num_b = 5.0 * n * std::pow(v_n, 5) * se2_22_v;
    it.B_n = num_b / (2.0 * d22 * d22 * (beta3_sum * beta3_sum + 3.0 * se2_33_c));
    it.b_n = std::min(std::pow(it.B_n, 1.0 / 7.0) * std::pow(n, -1.0 / 7.0), cap);
    const double B_noreg = num_b / (2.0 * d22 * d22 * beta3_sum * beta3_sum);
    it.b_n_noreg = std::min(std::pow(B_noreg / n, 1.0 / 7.0), cap);

    // Step 2: main bandwidth
    const auto w2 = local_poly_weights(x, k, it.b_n, 2, 2, Side::jump);
    const double beta2_jump = w2.apply(outcome);
    const double se2_22_b = se2(w2, sigma2);
    const double d01 = bias_constant(k, 0, 1, Side::plus);
    const double se2_01_v = se2(local_poly_weights(x, k, v_n, 1, 0, Side::jump), sigma2);
    const double num_h = n * v_n * se2_01_v;
    it.H_n = num_h / (4.0 * d01 * d01 * (beta2_jump * beta2_jump + 3.0 * se2_22_b));
    const double h = std::min(std::pow(it.H_n, 0.2) * std::pow(n, -0.2), cap);

    const auto w2nr = local_poly_weights(x, k, it.b_n_noreg, 2, 2, Side::jump);
    const double beta2_nr = w2nr.apply(outcome);
    it.h_n_noreg =
        std::min(std::pow(num_h / (4.0 * d01 * d01 * beta2_nr * beta2_nr) / n, 0.2), cap);

    BandwidthSelection out;
    out.h = h;
    out.method = BandwidthMethod::cct_mse;
    out.intermediates = it;
    return out;
}

BandwidthSelection select_cct_mse(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome,
                                  const Kernel& k, NnVarianceConfig cfg) {
    return select_cct_mse(x, outcome, k, NearestNeighbors(x, cfg));
}

BiasAwareCriterion parse_bias_aware_criterion(const std::string& s) {
    if (s == "mse") return BiasAwareCriterion::mse;
    if (s == "flci") return BiasAwareCriterion::flci;
    throw InvalidArgument("bandwidth", "unknown bias-aware criterion '" + s + "'");
}

BandwidthSelection select_bias_aware(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome,
                                     const Kernel& k, const BiasAwareOptions& opt,
                                     const NearestNeighbors& nn) {
    if (opt.smoothness < 0.0) {
        throw InvalidArgument("bandwidth", "smoothness bound must be nonnegative");
    }
    // smallest h leaving two points strictly inside the window on each side
    std::vector<double> plus, minus;
    for (Index i = 0; i < x.size(); ++i) {
        (x(i) >= 0.0 ? plus : minus).push_back(std::abs(x(i)));
    }
    if (plus.size() < 3 || minus.size() < 3) {
        throw DegenerateRunning("bandwidth", "fewer than 3 observations on a side");
    }
    std::nth_element(plus.begin(), plus.begin() + 2, plus.end());
    std::nth_element(minus.begin(), minus.begin() + 2, minus.end());
    const double h_lo = std::max(plus[2], minus[2]) * (1.0 + 1e-9);
    const double h_hi = max_abs(x);
    if (!(h_hi > h_lo)) {
        throw DegenerateRunning("bandwidth", "running variable has no usable spread");
    }
    const Eigen::VectorXd sigma2 = nn.sigma2(outcome);

    auto objective = [&](double h) -> BiasAwareEval {
        try {
            const auto w = local_poly_weights(x, k, h, 1, 0, Side::jump);
            const double se = standard_error(w, sigma2);
            const double b = std::abs(bias_bound(w, x, opt.smoothness));
            if (opt.criterion == BiasAwareCriterion::mse) return {b * b + se * se, true};
            return {se > 0.0 ? z_crit(opt.alpha, b / se) * se : b, true};
        } catch (const Error& e) {
            if (e.category() != ErrorCategory::numerical) throw;
            return {std::numeric_limits<double>::infinity(), false};
        }
    };

    const int g = std::max(opt.grid_points, 3);
    const double llo = std::log(h_lo);
    const double lhi = std::log(h_hi);
    std::vector<double> grid(g), val(g);
    int best = -1;
    for (int i = 0; i < g; ++i) {
        grid[i] = std::exp(llo + (lhi - llo) * i / (g - 1));
        val[i] = objective(grid[i]).value;
        if (best < 0 || val[i] < val[best]) best = i;
    }
    if (!std::isfinite(val[best])) {
        throw DegenerateRunning("bandwidth", "no feasible bandwidth on the search grid");
    }

    // golden section on log h within the neighboring grid cells
    double a = std::log(grid[std::max(best - 1, 0)]);
    double b = std::log(grid[std::min(best + 1, g - 1)]);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = objective(std::exp(c)).value;
    double fd = objective(std::exp(d)).value;
    while (b - a > opt.rel_tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = objective(std::exp(c)).value;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = objective(std::exp(d)).value;
        }
    }
    double h = std::exp(0.5 * (a + b));
    if (!(objective(h).value <= val[best])) h = grid[best];

    BandwidthSelection out;
    out.h = h;
    out.method = BandwidthMethod::bias_aware;
    return out;
}

BandwidthSelection select_undersmooth(const BandwidthSelection& base, Index n) {
    if (base.method != BandwidthMethod::cct_mse) {
        throw InvalidArgument("bandwidth", "undersmoothing requires an MSE-optimal base bandwidth");
    }
    BandwidthSelection out;
    out.h = base.h * std::pow(static_cast<double>(n), -1.0 / 20.0);
    out.method = BandwidthMethod::undersmooth;
    return out;
}

}  // namespace rdflex
