#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"
#include "helpers.hpp"
#include "rdflex/error.hpp"
#include "rdflex/locpoly.hpp"

using namespace rdflex;
using Eigen::VectorXd;

namespace {

const Kernel kUniform{KernelKind::uniform};
const Kernel kTriangular{KernelKind::triangular};

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double a : v) out(i++) = a;
    return out;
}

}  // namespace

TEST_CASE("pure jump and linear signals") {
    VectorXd x(20);
    for (int i = 0; i < 10; ++i) {
        x(i) = -0.05 * (i + 1);
        x(10 + i) = 0.05 * i;
    }
    VectorXd jump(20), line(20);
    for (int i = 0; i < 20; ++i) {
        jump(i) = x(i) >= 0.0 ? 1.0 : 0.0;
        line(i) = 2.0 + 3.0 * x(i);
    }
    CHECK(rd_point_estimate(x, jump, kUniform, 0.6, 1, 0) == doctest::Approx(1.0).epsilon(1e-12));
    for (int p = 1; p <= 3; ++p) {
        CHECK(std::abs(rd_point_estimate(x, line, kTriangular, 0.7, p, 0)) < 1e-10);
    }
    VectorXd y = jump + x;
    CHECK(rd_point_estimate(x, y, kTriangular, 0.8, 1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("five-point hand example") {
    // plus side (0.1, 0.2, 0.3): OLS intercept weights 1/3 - (x - 0.2)/0.02 * 0.2
    // minus side (-0.4, -0.2): line through two points, value at 0 is 2 y(-0.2) - y(-0.4)
    const VectorXd x = vec({-0.4, -0.2, 0.1, 0.2, 0.3});
    const auto w = local_poly_weights(x, kUniform, 0.5, 1, 0, Side::jump);
    const double expect[] = {1.0, -2.0, 4.0 / 3, 1.0 / 3, -2.0 / 3};
    for (int i = 0; i < 5; ++i) CHECK(w.w(i) == doctest::Approx(expect[i]).epsilon(1e-12));
    CHECK(w.n_plus == 3);
    CHECK(w.n_minus == 2);

    const auto plus = local_poly_weights(x, kUniform, 0.5, 1, 0, Side::plus);
    const auto minus = local_poly_weights(x, kUniform, 0.5, 1, 0, Side::minus);
    for (int i = 0; i < 5; ++i) CHECK(w.w(i) == doctest::Approx(plus.w(i) - minus.w(i)));
}

TEST_CASE("matches a direct four-regressor weighted regression") {
    Stream rng(42, "locpoly-direct");
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = 300;
        const VectorXd x = testutil::uniform_vec(rng, n, -1.0, 1.0);
        const VectorXd y = testutil::normal_vec(rng, n) + x.array().square().matrix();
        const double h = rng.uniform(0.3, 0.9);
        Eigen::MatrixXd a(n, 4);
        VectorXd b(n);
        for (Index i = 0; i < n; ++i) {
            const double t = x(i) >= 0.0 ? 1.0 : 0.0;
            const double sw = std::sqrt(kTriangular(x(i) / h));
            a.row(i) << sw * t, sw * x(i), sw * t * x(i), sw;
            b(i) = sw * y(i);
        }
        const VectorXd beta = a.colPivHouseholderQr().solve(b);
        CHECK(rd_point_estimate(x, y, kTriangular, h, 1, 0) == doctest::Approx(beta(0)).epsilon(1e-9));
    }
}

TEST_CASE("polynomial exactness for random designs") {
    Stream rng(7, "exactness");
    int checked = 0;
    for (int design = 0; design < 200; ++design) {
        const Index n = 80 + static_cast<Index>(rng.below(200));
        const VectorXd x = testutil::uniform_vec(rng, n, -2.0, 2.0);
        const double h = rng.uniform(0.8, 2.0);
        const Kernel k = design % 2 == 0 ? kTriangular : kUniform;
        for (int p = 1; p <= 4; ++p) {
            for (int v = 0; v <= p; ++v) {
                for (Side side : {Side::plus, Side::minus}) {
                    const auto w = local_poly_weights(x, k, h, p, v, side);
                    for (int j = 0; j <= p; ++j) {
                        double s = 0.0;
                        for (Index i = 0; i < n; ++i) s += w.w(i) * std::pow(x(i), j);
                        const double target = j == v ? 1.0 : 0.0;
                        CHECK(std::abs(s - target) * std::pow(h, v - j) < 1e-8);
                        ++checked;
                    }
                }
            }
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("scale equivariance and outcome translation") {
    Stream rng(3, "scale");
    const Index n = 200;
    const VectorXd x = testutil::uniform_vec(rng, n, -1.0, 1.0);
    const VectorXd y = testutil::normal_vec(rng, n);
    const double c = 3.5;
    for (int v = 0; v <= 2; ++v) {
        const auto w1 = local_poly_weights(x, kTriangular, 0.7, 2, v, Side::jump);
        const auto w2 = local_poly_weights(c * x, kTriangular, c * 0.7, 2, v, Side::jump);
        CHECK((w2.w - w1.w * std::pow(c, -v)).cwiseAbs().maxCoeff() < 1e-9 * w1.w.cwiseAbs().maxCoeff());
        const double a = rd_point_estimate(x, y, kTriangular, 0.7, 2, v);
        const double b = rd_point_estimate(x, (y.array() + 11.0).matrix(), kTriangular, 0.7, 2, v);
        CHECK(std::abs(a - b) < 1e-9);
    }
}

TEST_CASE("observations at the cutoff and the support edge") {
    const VectorXd x = vec({-0.5, -0.25, -0.1, 0.0, 0.25, 0.5});
    const auto w = local_poly_weights(x, kTriangular, 0.5, 1, 0, Side::plus);
    CHECK(w.w(3) != 0.0);  // X = 0 is on the plus side
    CHECK(w.w(5) == 0.0);  // K(1) = 0 for the triangular kernel
    CHECK(w.w(0) == 0.0);
    const auto wu = local_poly_weights(x, kUniform, 0.5, 1, 0, Side::plus);
    CHECK(wu.w(5) != 0.0);  // closed support: uniform K(1) = 1/2
}

TEST_CASE("local polynomial errors") {
    const VectorXd x = vec({-0.3, -0.2, 0.1, 0.2});
    CHECK_THROWS_AS(local_poly_weights(x, kUniform, 0.5, 2, 0, Side::jump), InsufficientSupport);
    const VectorXd tied = vec({-0.3, -0.2, 0.2, 0.2, 0.2});
    CHECK_THROWS_AS(local_poly_weights(tied, kUniform, 0.5, 1, 0, Side::plus), SingularDesign);
    CHECK_THROWS_AS(local_poly_weights(x, kUniform, -1.0, 1, 0, Side::jump), InvalidArgument);
    CHECK_THROWS_AS(local_poly_weights(x, kUniform, 0.5, 1, 2, Side::jump), InvalidArgument);
}

TEST_CASE("fold-restricted weights") {
    const VectorXd x = vec({-0.4, -0.3, -0.2, -0.1, 0.1, 0.2, 0.3, 0.4});
    const std::vector<char> all(8, 1);
    const auto full = local_poly_weights(x, kTriangular, 0.9, 1, 0, Side::jump);
    const auto same = fold_restricted_weights(x, kTriangular, 0.9, 1, 0, Side::jump, all);
    CHECK((full.w - same.w).cwiseAbs().maxCoeff() == 0.0);

    // fold 0 = {-0.4, -0.2, 0.1, 0.3}: two points per side, exact line through them
    const std::vector<char> f0{1, 0, 1, 0, 1, 0, 1, 0};
    const std::vector<char> f1{0, 1, 0, 1, 0, 1, 0, 1};
    const auto w0 = fold_restricted_weights(x, kUniform, 1.0, 1, 0, Side::jump, f0);
    const double expect0[] = {1.0, 0.0, -2.0, 0.0, 1.5, 0.0, -0.5, 0.0};
    for (int i = 0; i < 8; ++i) CHECK(w0.w(i) == doctest::Approx(expect0[i]).epsilon(1e-12));
    const auto w1 = fold_restricted_weights(x, kUniform, 1.0, 1, 0, Side::jump, f1);
    for (const auto* w : {&w0, &w1}) {
        double sp = 0.0, sm = 0.0;
        for (int i = 0; i < 8; ++i) (x(i) >= 0 ? sp : sm) += w->w(i);
        CHECK(sp == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(sm == doctest::Approx(-1.0).epsilon(1e-12));
    }
}

TEST_CASE("dataset validation and subset") {
    Dataset d = testutil::toy_data(10, 2, 1);
    CHECK_NOTHROW(d.validate());
    const std::vector<Index> rows{3, 1};
    const Dataset s = d.subset(rows);
    CHECK(s.n() == 2);
    CHECK(s.x(0) == d.x(3));
    CHECK(s.z(1, 1) == d.z(1, 1));
    d.t = VectorXd::Constant(10, 0.5);
    CHECK_THROWS_AS(d.validate(), InvalidArgument);
    CHECK_THROWS_AS(column(testutil::toy_data(5, 0, 1), Column::t), MissingTreatment);
}
