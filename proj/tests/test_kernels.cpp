#include <cmath>

#include "doctest.h"
#include "rdflex/error.hpp"
#include "rdflex/kernels.hpp"

using namespace rdflex;

namespace {

const Kernel kUniform{KernelKind::uniform};
const Kernel kTriangular{KernelKind::triangular};
const Kernel kEpan{KernelKind::epanechnikov};

// exact 2x2 solve for e0' S^{-1} c
double solve2_first(double s00, double s01, double s11, double c0, double c1) {
    const double det = s00 * s11 - s01 * s01;
    return (s11 * c0 - s01 * c1) / det;
}

double midpoint_integral(const Kernel& k, double lo, double hi, int m = 200000) {
    const double step = (hi - lo) / m;
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += k(lo + (i + 0.5) * step);
    return s * step;
}

}  // namespace

TEST_CASE("kernel evaluation") {
    CHECK(kUniform(0.5) == 0.5);
    CHECK(kTriangular(0.5) == 0.5);
    CHECK(kTriangular(1.5) == 0.0);
    CHECK(kUniform(1.0) == 0.5);
    CHECK(kUniform(-1.0001) == 0.0);
    CHECK(kEpan(0.0) == doctest::Approx(0.75));
    for (const Kernel& k : {kUniform, kTriangular, kEpan}) {
        for (double v : {0.0, 0.1, 0.37, 0.9, 1.0, 1.3}) {
            CHECK(k(v) >= 0.0);
            CHECK(k(v) == k(-v));
        }
        CHECK(midpoint_integral(k, -1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("kernel names round-trip") {
    for (const Kernel& k : {kUniform, kTriangular, kEpan}) CHECK(parse_kernel(k.name()).kind == k.kind);
    CHECK_THROWS_AS(parse_kernel("gaussian"), InvalidArgument);
}

TEST_CASE("one-sided moments, closed form") {
    const auto u = one_sided_moments(kUniform, 3);
    const double u_ref[] = {1.0 / 2, 1.0 / 4, 1.0 / 6, 1.0 / 8};
    const auto t = one_sided_moments(kTriangular, 3);
    const double t_ref[] = {1.0 / 2, 1.0 / 6, 1.0 / 12, 1.0 / 20};
    for (int j = 0; j < 4; ++j) {
        CHECK(u[j] == doctest::Approx(u_ref[j]).epsilon(1e-14));
        CHECK(t[j] == doctest::Approx(t_ref[j]).epsilon(1e-14));
    }
}

TEST_CASE("one-sided moments agree with quadrature and decrease") {
    for (const Kernel& k : {kUniform, kTriangular, kEpan}) {
        const auto cf = one_sided_moments(k, 11);
        const auto q = one_sided_moments_quadrature(k, 11);
        CHECK(cf[0] == doctest::Approx(0.5).epsilon(1e-15));
        for (int j = 0; j <= 11; ++j) {
            CHECK(std::abs(q[j] - cf[j]) <= 1e-10 * std::abs(cf[j]));
            if (j > 0) CHECK(cf[j] < cf[j - 1]);
        }
        CHECK(cf[2] * cf[0] - cf[1] * cf[1] > 0.0);
    }
}

TEST_CASE("nu_bar and kappa_bar") {
    const auto u = nu_bar_kappa_bar(kUniform);
    CHECK(std::abs(u.nu_bar - (-1.0 / 6)) < 1e-12);
    CHECK(std::abs(u.kappa_bar - 4.0) < 1e-10);
    const auto t = nu_bar_kappa_bar(kTriangular);
    CHECK(std::abs(t.nu_bar - (-1.0 / 10)) < 1e-12);
    CHECK(std::abs(t.kappa_bar - 24.0 / 5) < 1e-10);
    for (const Kernel& k : {kUniform, kTriangular, kEpan}) {
        CHECK(kappa_bar_quadrature(k) == doctest::Approx(nu_bar_kappa_bar(k).kappa_bar).epsilon(1e-9));
    }
}

TEST_CASE("bias constant of the local linear fit") {
    // S_1 = [[1/2, 1/4], [1/4, 1/6]], c_1 = [1/6, 1/8]; (p+1)! = 2 absorbed
    const double raw = solve2_first(0.5, 0.25, 1.0 / 6, 1.0 / 6, 1.0 / 8);
    CHECK(raw == doctest::Approx(-1.0 / 6).epsilon(1e-14));
    CHECK(bias_constant(kUniform, 0, 1, Side::plus) == doctest::Approx(raw / 2.0).epsilon(1e-12));
    for (const Kernel& k : {kUniform, kTriangular, kEpan}) {
        CHECK(bias_constant(k, 0, 1, Side::plus) ==
              doctest::Approx(nu_bar_kappa_bar(k).nu_bar / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("bias constant parity and jump") {
    for (const Kernel& k : {kUniform, kTriangular, kEpan}) {
        for (int p = 0; p <= 4; ++p) {
            for (int v = 0; v <= p; ++v) {
                const double plus = bias_constant(k, v, p, Side::plus);
                const double minus = bias_constant(k, v, p, Side::minus);
                const double sign = (p + 1 - v) % 2 == 0 ? 1.0 : -1.0;
                CHECK(std::abs(minus - sign * plus) <= 1e-10 * std::max(1.0, std::abs(plus)));
                CHECK(bias_constant(k, v, p, Side::jump) ==
                      doctest::Approx(plus - minus).epsilon(1e-12));
            }
        }
    }
    CHECK_THROWS_AS(bias_constant(kUniform, 2, 1, Side::plus), InvalidArgument);
}
