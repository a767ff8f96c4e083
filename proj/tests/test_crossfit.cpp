#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>

#include "doctest.h"
#include "helpers.hpp"
#include "rdflex/crossfit.hpp"
#include "rdflex/error.hpp"

using namespace rdflex;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const Kernel tri{KernelKind::triangular};

// Records the training rows it was given, by their x values.
class SpyAdjuster : public Adjuster {
public:
    mutable std::vector<std::set<double>> seen;
    ModelPtr fit(const Dataset& train, Column c, const LocalizationWindow& w, Stream& rng) const override {
        seen.emplace_back(train.x.begin(), train.x.end());
        return ZeroAdjuster().fit(train, c, w, rng);
    }
    std::string id() const override { return "spy"; }
};

}  // namespace

TEST_CASE("fold assignment sizes") {
    auto sizes = assign_folds(10, 5, 1).sizes();
    CHECK(std::all_of(sizes.begin(), sizes.end(), [](Index s) { return s == 2; }));
    sizes = assign_folds(11, 5, 1).sizes();
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<Index>{2, 2, 2, 2, 3});
    for (Index n : {7, 50, 101}) {
        for (int S : {1, 2, 3, 7}) {
            const auto f = assign_folds(n, S, 42);
            const auto sz = f.sizes();
            CHECK(*std::max_element(sz.begin(), sz.end()) - *std::min_element(sz.begin(), sz.end()) <= 1);
            for (int s = 0; s < S; ++s) {
                CHECK(static_cast<Index>(f.rows_in(s).size() + f.rows_out(s).size()) == n);
            }
        }
    }
    CHECK(assign_folds(30, 3, 9).fold_of == assign_folds(30, 3, 9).fold_of);
    CHECK(assign_folds(30, 3, 9).fold_of != assign_folds(30, 3, 10).fold_of);
    CHECK_THROWS_AS(assign_folds(3, 4, 1), InvalidArgument);
    CHECK_THROWS_AS(assign_folds(3, 0, 1), InvalidArgument);
}

TEST_CASE("a single fold leaves nothing to train on") {
    const auto data = testutil::toy_data(40, 2, 1);
    const auto folds = assign_folds(40, 1, 1);
    CHECK_THROWS_AS(fit_adjusters(data, folds, ZeroAdjuster(), {}, Column::y, 1), NoTrainingData);
}

TEST_CASE("models never see their own fold") {
    const auto data = testutil::toy_data(60, 1, 2);
    const auto folds = assign_folds(60, 4, 3);
    SpyAdjuster spy;
    fit_adjusters(data, folds, spy, {}, Column::y, 1);
    REQUIRE(spy.seen.size() == 4);
    for (int s = 0; s < 4; ++s) {
        for (Index i : folds.rows_in(s)) CHECK(spy.seen[s].count(data.x(i)) == 0);
        for (Index i : folds.rows_out(s)) CHECK(spy.seen[s].count(data.x(i)) == 1);
    }
}

TEST_CASE("zero and constant adjustments leave the estimate unchanged") {
    const auto data = testutil::share(testutil::toy_data(500, 3, 4));
    const NearestNeighbors nn(data->x);
    const auto folds = assign_folds(500, 5, 5);
    const RdFit base = local_fit(data->x, data->y, tri, 0.5, 1, 0, nn);

    const auto zero = adjust(data, folds, fit_adjusters(*data, folds, ZeroAdjuster(), {}, Column::y, 1));
    CHECK(zero.m == data->y);
    const RdFit f0 = estimate_dml2(zero, tri, 0.5, 1, nn);
    CHECK(f0.tau_hat == base.tau_hat);
    CHECK(f0.se == base.se);

    const auto five =
        adjust(data, folds, fit_adjusters(*data, folds, ConstantAdjuster(5.0), {}, Column::y, 1));
    CHECK((five.eta.array() == 5.0).all());
    CHECK((five.m - (data->y.array() - 5.0).matrix()).cwiseAbs().maxCoeff() == 0.0);
    const RdFit f5 = estimate_dml2(five, tri, 0.5, 1, nn);
    CHECK(std::abs(f5.tau_hat - base.tau_hat) < 1e-9);
    CHECK(std::abs(f5.se - base.se) < 1e-9);
}

TEST_CASE("with one fold, per-fold averaging equals pooling") {
    const auto data = testutil::share(testutil::toy_data(400, 2, 6));
    const NearestNeighbors nn(data->x);
    FoldAssignment one;
    one.n = 400;
    one.S = 1;
    one.fold_of.assign(400, 0);
    Stream rng(1, "unused");
    std::vector<ModelPtr> models{ConstantAdjuster(0.3).fit(*data, Column::y, {}, rng)};
    const auto adj = adjust(data, one, models);
    const RdFit d1 = estimate_dml1(adj, tri, 0.6, 1, nn);
    const RdFit d2 = estimate_dml2(adj, tri, 0.6, 1, nn);
    CHECK(d1.tau_hat == doctest::Approx(d2.tau_hat).epsilon(1e-12));
    CHECK(d1.se == doctest::Approx(d2.se).epsilon(1e-12));
}

TEST_CASE("per-fold estimates average to a sensible value") {
    const auto data = testutil::share(testutil::toy_data(2000, 0, 7));
    const NearestNeighbors nn(data->x);
    const auto folds = assign_folds(2000, 5, 8);
    const auto adj = adjust(data, folds, fit_adjusters(*data, folds, ZeroAdjuster(), {}, Column::y, 1));
    const RdFit d1 = estimate_dml1(adj, tri, 0.5, 1, nn);
    const RdFit d2 = estimate_dml2(adj, tri, 0.5, 1, nn);
    CHECK(std::abs(d1.tau_hat - d2.tau_hat) < 3.0 * d2.se);
    CHECK(d1.se == doctest::Approx(d2.se).epsilon(0.1));
}

TEST_CASE("split aggregation") {
    const std::vector<SplitResult> s{{1.0, 0.5, 0.2}, {2.0, 0.4, 0.3}, {4.0, 0.3, 0.1}};
    const RdFit f = aggregate_splits(s);
    CHECK(f.tau_hat == 2.0);
    CHECK(f.h == 0.2);
    // se^2 + (tau - 2)^2 = {1.25, 0.16, 4.09}
    CHECK(f.se == doctest::Approx(std::sqrt(1.25)));
    const RdFit single = aggregate_splits({{1.5, 0.7, 0.4}});
    CHECK(single.tau_hat == 1.5);
    CHECK(single.se == doctest::Approx(0.7).epsilon(1e-15));
    CHECK_THROWS_AS(aggregate_splits({}), InvalidArgument);

    int calls = 0;
    const RdFit r = repeated_splits(20, 2, 5, 3, [&](const FoldAssignment& f, int) {
        ++calls;
        return SplitResult{static_cast<double>(f.fold_of[0]), 0.0, 1.0};
    });
    CHECK(calls == 5);
    CHECK((r.tau_hat == 0.0 || r.tau_hat == 1.0));
}

TEST_CASE("localized linear adjuster is the side-wise weighted least squares average") {
    Stream rng(9, "loclin");
    Dataset d;
    const Index n = 300;
    d.x = testutil::uniform_vec(rng, n, -1.0, 1.0);
    d.z.resize(n, 2);
    d.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        d.z(i, 0) = rng.normal();
        d.z(i, 1) = rng.normal();
        d.y(i) = (d.x(i) >= 0 ? 2.0 * d.z(i, 0) : -d.z(i, 1)) + 0.3 * rng.normal();
    }
    LocalizationWindow win;
    win.b = 0.6;
    win.kernel = Kernel{KernelKind::triangular};
    Stream fit_rng(1, "fit");
    const auto model = LocalizedAdjuster(make_learner("linear")).fit(d, Column::y, win, fit_rng);

    auto side_beta = [&](bool plus) {
        std::vector<Index> rows;
        for (Index i = 0; i < n; ++i) {
            const double x = d.x(i);
            if ((plus ? (x >= 0 && x < win.b) : (x < 0 && x > -win.b)) && win.kernel(x / win.b) > 0) rows.push_back(i);
        }
        MatrixXd a(rows.size(), 3);
        VectorXd b(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const double sw = std::sqrt(win.kernel(d.x(rows[r]) / win.b));
            a.row(r) << sw, sw * d.z(rows[r], 0), sw * d.z(rows[r], 1);
            b(r) = sw * d.y(rows[r]);
        }
        return VectorXd(a.colPivHouseholderQr().solve(b));
    };
    const VectorXd avg = 0.5 * (side_beta(true) + side_beta(false));
    const MatrixXd q = (MatrixXd(3, 2) << 0.0, 0.0, 1.0, 0.0, -0.5, 2.0).finished();
    const VectorXd got = model->eta(q);
    for (int r = 0; r < 3; ++r) {
        CHECK(got(r) == doctest::Approx(avg(0) + avg(1) * q(r, 0) + avg(2) * q(r, 1)).epsilon(1e-9));
    }

    LocalizationWindow narrow = win;
    narrow.b = 1e-6;
    CHECK_THROWS_AS(LocalizedAdjuster(make_learner("linear")).fit(d, Column::y, narrow, fit_rng),
                    NoTrainingData);
}

TEST_CASE("joint linear adjustment recovers the covariate coefficients") {
    Stream rng(10, "joint");
    Dataset d;
    const Index n = 3000;
    d.x = testutil::uniform_vec(rng, n, -1.0, 1.0);
    d.z.resize(n, 2);
    d.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        d.z(i, 0) = rng.normal();
        d.z(i, 1) = rng.normal();
        d.y(i) = (d.x(i) >= 0) + d.x(i) + 1.5 * d.z(i, 0) - 0.5 * d.z(i, 1);
    }
    const VectorXd g = JointLinearAdjuster(tri, 0.7, 1).gamma(d, Column::y);
    CHECK(g(0) == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(g(1) == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("per-fold linear adjustments on a hand-sized sample") {
    // two folds of four rows; each side of each fold has two points, so the
    // side-wise lines interpolate exactly
    Dataset d;
    d.x = (VectorXd(8) << -0.5, -0.2, 0.2, 0.5, -0.4, -0.1, 0.1, 0.4).finished();
    d.z = (MatrixXd(8, 1) << 0, 1, 0, 1, 0, 2, 0, 2).finished();
    // fold 0: below 1 + 2z, above 2 + 4z; fold 1: below -1 + z, above 3 - z
    d.y = (VectorXd(8) << 1, 3, 2, 6, -1, 1, 3, 1).finished();
    FoldAssignment folds;
    folds.n = 8;
    folds.S = 2;
    folds.fold_of = {0, 0, 0, 0, 1, 1, 1, 1};
    LocalizationWindow win;
    win.b = 1.0;
    const LocalizedAdjuster adj(make_learner("linear"));
    const auto models = fit_adjusters(d, folds, adj, win, Column::y, 3);
    REQUIRE(models.size() == 2);
    const MatrixXd q = (MatrixXd(2, 1) << 0.0, 1.0).finished();
    // model 0 sees fold 1: mean line 1 + 0 z; model 1 sees fold 0: 1.5 + 3 z
    const VectorXd e0 = models[0]->eta(q);
    const VectorXd e1 = models[1]->eta(q);
    CHECK(e0(0) == doctest::Approx(1.0));
    CHECK(e0(1) == doctest::Approx(1.0));
    CHECK(e1(0) == doctest::Approx(1.5));
    CHECK(e1(1) == doctest::Approx(4.5));

    const auto a = adjust(testutil::share(d), folds, models);
    CHECK(a.eta(1) == doctest::Approx(1.0));
    CHECK(a.eta(5) == doctest::Approx(7.5));
    CHECK(a.m(5) == doctest::Approx(1.0 - 7.5));
}

TEST_CASE("per-fold averaging and pooling agree within a fraction of the standard error") {
    std::vector<double> ratio;
    for (int r = 0; r < 25; ++r) {
        const auto data = testutil::share(testutil::toy_data(2000, 3, 100 + r));
        const NearestNeighbors nn(data->x);
        const auto folds = assign_folds(2000, 5, r);
        LocalizationWindow win;
        win.b = 1.0;
        const auto models =
            fit_adjusters(*data, folds, LocalizedAdjuster(make_learner("linear")), win, Column::y, r);
        const auto adj = adjust(data, folds, models);
        const RdFit d1 = estimate_dml1(adj, tri, 0.5, 1, nn);
        const RdFit d2 = estimate_dml2(adj, tri, 0.5, 1, nn);
        ratio.push_back(std::abs(d1.tau_hat - d2.tau_hat) / d2.se);
    }
    std::nth_element(ratio.begin(), ratio.begin() + 12, ratio.end());
    CHECK(ratio[12] < 0.2);
}
