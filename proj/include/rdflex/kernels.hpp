#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rdflex {

enum class KernelKind { uniform, triangular, epanechnikov };

enum class Side { plus, minus, jump };

/// Symmetric density kernel supported on [-1, 1].
struct Kernel {
    KernelKind kind = KernelKind::triangular;

    /// K(v); the support is closed, so K(+-1) is 1/2 for the uniform kernel.
    double operator()(double v) const noexcept;

    std::string name() const;
};

Kernel parse_kernel(std::string_view name);

double factorial(int n);

/// nu_j = int_0^inf v^j K(v) dv for j = 0..j_max, in closed form.
std::vector<double> one_sided_moments(const Kernel& k, int j_max);

/// The same moments by adaptive Gauss-Kronrod quadrature.
std::vector<double> one_sided_moments_quadrature(const Kernel& k, int j_max);

struct NuKappa {
    double nu_bar;
    double kappa_bar;
};

/// Kernel constants of the local linear jump estimator: the leading bias is
/// h^2 nu_bar/2 (m''(0+) - m''(0-)) and the variance kappa_bar/f(0) (s+^2 + s-^2)/(nh).
NuKappa nu_bar_kappa_bar(const Kernel& k);

/// kappa_bar by quadrature of int_0^1 (K(v)(nu_1 v - nu_2))^2 dv, for cross-checks.
double kappa_bar_quadrature(const Kernel& k);

/// Leading-bias constant B*_{v,p} of the one-sided order-p fit for the v-th
/// coefficient, with the (p+1)! absorbed:
///
///   B*_{v,p} = e_v' S_p^{-1} c_p / (p+1)!
///
/// where S_p has entries nu*_{j+k} and c_p entries nu*_{p+1+j}, nu* being the
/// moments of the requested side (nu-_j = (-1)^j nu_j). The bias of the v-th
/// derivative estimate is then h^{p+1-v} v! B*_{v,p} m^{(p+1)}(0*).
/// Side::jump returns B+_{v,p} - B-_{v,p}.
double bias_constant(const Kernel& k, int v, int p, Side side);

}  // namespace rdflex
