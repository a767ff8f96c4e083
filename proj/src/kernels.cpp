#include "rdflex/kernels.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rdflex/error.hpp"

namespace rdflex {

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

namespace {

// int_0^1 v^j K(v)^2 dv
double squared_moment(const Kernel& k, int j) {
    const double a = j + 1.0;
    switch (k.kind) {
    case KernelKind::uniform: return 0.25 / a;
    case KernelKind::triangular: return 1.0 / a - 2.0 / (a + 1.0) + 1.0 / (a + 2.0);
    case KernelKind::epanechnikov:
        return 0.5625 * (1.0 / a - 2.0 / (a + 2.0) + 1.0 / (a + 4.0));
    }
    return 0.0;
}

}  // namespace

double Kernel::operator()(double v) const noexcept {
    const double a = std::abs(v);
    if (a > 1.0) return 0.0;
    switch (kind) {
    case KernelKind::uniform: return 0.5;
    case KernelKind::triangular: return 1.0 - a;
    case KernelKind::epanechnikov: return 0.75 * (1.0 - a * a);
    }
    return 0.0;
}

std::string Kernel::name() const {
    switch (kind) {
    case KernelKind::uniform: return "uniform";
    case KernelKind::triangular: return "triangular";
    case KernelKind::epanechnikov: return "epanechnikov";
    }
    return "?";
}

Kernel parse_kernel(std::string_view name) {
    if (name == "uniform") return {KernelKind::uniform};
    if (name == "triangular") return {KernelKind::triangular};
    if (name == "epanechnikov") return {KernelKind::epanechnikov};
    throw InvalidArgument("kernels", "unknown kernel '" + std::string(name) + "'");
}

std::vector<double> one_sided_moments(const Kernel& k, int j_max) {
    std::vector<double> nu(static_cast<std::size_t>(j_max) + 1);
    for (int j = 0; j <= j_max; ++j) {
        const double a = j + 1.0;
        switch (k.kind) {
        case KernelKind::uniform: nu[j] = 0.5 / a; break;
        case KernelKind::triangular: nu[j] = 1.0 / a - 1.0 / (a + 1.0); break;
        case KernelKind::epanechnikov: nu[j] = 0.75 * (1.0 / a - 1.0 / (a + 2.0)); break;
        }
    }
    return nu;
}

std::vector<double> one_sided_moments_quadrature(const Kernel& k, int j_max) {
    using boost::math::quadrature::gauss_kronrod;
    std::vector<double> nu(static_cast<std::size_t>(j_max) + 1);
    for (int j = 0; j <= j_max; ++j) {
        auto f = [&](double v) { return std::pow(v, j) * k(v); };
        nu[j] = gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, 1e-14);
    }
    return nu;
}

NuKappa nu_bar_kappa_bar(const Kernel& k) {
    const auto nu = one_sided_moments(k, 3);
    const double den = nu[2] * nu[0] - nu[1] * nu[1];
    const double nu_bar = (nu[2] * nu[2] - nu[1] * nu[3]) / den;
    // expand (nu1 v - nu2)^2 against the squared-kernel moments
    const double num = nu[1] * nu[1] * squared_moment(k, 2) -
                       2.0 * nu[1] * nu[2] * squared_moment(k, 1) +
                       nu[2] * nu[2] * squared_moment(k, 0);
    return {nu_bar, num / (den * den)};
}

double kappa_bar_quadrature(const Kernel& k) {
    using boost::math::quadrature::gauss_kronrod;
    const auto nu = one_sided_moments_quadrature(k, 2);
    const double den = nu[2] * nu[0] - nu[1] * nu[1];
    auto f = [&](double v) {
        const double t = k(v) * (nu[1] * v - nu[2]);
        return t * t;
    };
    return gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, 1e-14) / (den * den);
}

double bias_constant(const Kernel& k, int v, int p, Side side) {
    if (v < 0 || v > p) {
        throw InvalidArgument("kernels", "bias_constant requires 0 <= v <= p");
    }
    if (side == Side::jump) {
        return bias_constant(k, v, p, Side::plus) - bias_constant(k, v, p, Side::minus);
    }
    const auto nu = one_sided_moments(k, 2 * p + 1);
    const double sign = side == Side::minus ? -1.0 : 1.0;
    auto moment = [&](int j) { return (j % 2 == 1 ? sign : 1.0) * nu[j]; };

    const int m = p + 1;
    Eigen::MatrixXd s(m, m);
    Eigen::VectorXd c(m);
    for (int j = 0; j < m; ++j) {
        for (int l = 0; l < m; ++l) s(j, l) = moment(j + l);
        c(j) = moment(p + 1 + j);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
    if (!lu.isInvertible()) {
        throw SingularDesign("kernels", "moment matrix is singular");
    }
    const Eigen::VectorXd sol = lu.solve(c);
    return sol(v) / factorial(p + 1);
}

}  // namespace rdflex
