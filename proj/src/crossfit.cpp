#include "rdflex/crossfit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "rdflex/error.hpp"

namespace rdflex {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class ConstantModel : public AdjustmentModel {
public:
    explicit ConstantModel(double c) : c_(c) {}
    VectorXd eta(const MatrixXd& z) const override { return VectorXd::Constant(z.rows(), c_); }

private:
    double c_;
};

class FunctionModel : public AdjustmentModel {
public:
    explicit FunctionModel(EtaFn f) : f_(std::move(f)) {}
    VectorXd eta(const MatrixXd& z) const override { return f_(z); }

private:
    EtaFn f_;
};

class AveragedModel : public AdjustmentModel {
public:
    AveragedModel(std::unique_ptr<Regressor> plus, std::unique_ptr<Regressor> minus)
        : plus_(std::move(plus)), minus_(std::move(minus)) {}
    VectorXd eta(const MatrixXd& z) const override {
        return 0.5 * (plus_->predict(z) + minus_->predict(z));
    }

private:
    std::unique_ptr<Regressor> plus_, minus_;
};

class LinearIndexModel : public AdjustmentModel {
public:
    explicit LinearIndexModel(VectorXd gamma) : gamma_(std::move(gamma)) {}
    VectorXd eta(const MatrixXd& z) const override { return z * gamma_; }

private:
    VectorXd gamma_;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace

std::vector<Index> FoldAssignment::rows_in(int s) const {
    std::vector<Index> out;
    for (Index i = 0; i < n; ++i) {
        if (fold_of[i] == s) out.push_back(i);
    }
    return out;
}

std::vector<Index> FoldAssignment::rows_out(int s) const {
    std::vector<Index> out;
    for (Index i = 0; i < n; ++i) {
        if (fold_of[i] != s) out.push_back(i);
    }
    return out;
}

std::vector<char> FoldAssignment::mask(int s) const {
    std::vector<char> out(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) out[i] = fold_of[i] == s;
    return out;
}

std::vector<Index> FoldAssignment::sizes() const {
    std::vector<Index> out(static_cast<std::size_t>(S), 0);
    for (int f : fold_of) ++out[f];
    return out;
}

FoldAssignment assign_folds(Index n, int S, std::uint64_t seed) {
    if (S < 1) throw InvalidArgument("crossfit", "number of folds must be >= 1");
    if (S > n) throw InvalidArgument("crossfit", "more folds than observations");
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    Stream rng(seed, "folds");
    rng.shuffle(perm);
    FoldAssignment f;
    f.n = n;
    f.S = S;
    f.fold_of.assign(static_cast<std::size_t>(n), 0);
    for (std::size_t r = 0; r < perm.size(); ++r) f.fold_of[perm[r]] = static_cast<int>(r % S);
    return f;
}

ModelPtr ZeroAdjuster::fit(const Dataset&, Column, const LocalizationWindow&, Stream&) const {
    return std::make_shared<ConstantModel>(0.0);
}

ModelPtr ConstantAdjuster::fit(const Dataset&, Column, const LocalizationWindow&,
                               Stream&) const {
    return std::make_shared<ConstantModel>(c_);
}

ModelPtr OracleAdjuster::fit(const Dataset&, Column, const LocalizationWindow&, Stream&) const {
    return std::make_shared<FunctionModel>(f_);
}

ModelPtr LocalizedAdjuster::fit(const Dataset& train, Column outcome,
                                const LocalizationWindow& window, Stream& rng) const {
    if (!(window.b > 0.0)) throw InvalidArgument("crossfit", "window b must be positive");
    const VectorXd& y = column(train, outcome);
    std::unique_ptr<Regressor> side_fit[2];
    for (int s = 0; s < 2; ++s) {
        const bool plus = s == 0;
        std::vector<Index> rows;
        for (Index i = 0; i < train.n(); ++i) {
            const double xi = train.x(i);
            const bool in = plus ? (xi >= 0.0 && xi < window.b) : (xi < 0.0 && xi > -window.b);
            if (in && window.kernel(xi / window.b) > 0.0) rows.push_back(i);
        }
        if (rows.empty()) {
            throw NoTrainingData("crossfit", std::string("no training rows in the ") +
                                                 (plus ? "plus" : "minus") + " side window");
        }
        const auto m = static_cast<Index>(rows.size());
        MatrixXd z(m, train.d());
        VectorXd ys(m), w(m);
        for (Index r = 0; r < m; ++r) {
            z.row(r) = train.z.row(rows[r]);
            ys(r) = y(rows[r]);
            w(r) = window.kernel(train.x(rows[r]) / window.b);
        }
        Stream side_rng(rng.bits(), plus ? "mu-plus" : "mu-minus");
        side_fit[s] = learner_->fit(z, ys, w, side_rng);
    }
    return std::make_shared<AveragedModel>(std::move(side_fit[0]), std::move(side_fit[1]));
}

VectorXd JointLinearAdjuster::gamma(const Dataset& train, Column outcome) const {
    const VectorXd& y = column(train, outcome);
    std::vector<Index> rows;
    for (Index i = 0; i < train.n(); ++i) {
        if (k_(train.x(i) / h_) > 0.0) rows.push_back(i);
    }
    const int q = 2 * (p_ + 1);
    const auto m = static_cast<Index>(rows.size());
    if (m == 0) throw NoTrainingData("crossfit", "no training rows inside the bandwidth");
    MatrixXd a(m, q + train.d());
    VectorXd b(m);
    for (Index r = 0; r < m; ++r) {
        const Index i = rows[r];
        const double u = train.x(i) / h_;
        const double t = train.x(i) >= 0.0 ? 1.0 : 0.0;
        const double sw = std::sqrt(k_(u));
        double pw = 1.0;
        for (int j = 0; j <= p_; ++j) {
            a(r, j) = sw * pw;
            a(r, p_ + 1 + j) = sw * t * pw;
            pw *= u;
        }
        a.block(r, q, 1, train.d()) = sw * train.z.row(i);
        b(r) = sw * y(i);
    }
    const VectorXd coef = Eigen::CompleteOrthogonalDecomposition<MatrixXd>(a).solve(b);
    return coef.tail(train.d());
}

ModelPtr JointLinearAdjuster::fit(const Dataset& train, Column outcome,
                                  const LocalizationWindow&, Stream&) const {
    return std::make_shared<LinearIndexModel>(gamma(train, outcome));
}

std::vector<ModelPtr> fit_adjusters(const Dataset& data, const FoldAssignment& folds,
                                    const Adjuster& adj, const LocalizationWindow& window,
                                    Column outcome, std::uint64_t seed) {
    if (folds.n != data.n()) throw InvalidArgument("crossfit", "folds do not match the data");
    std::vector<ModelPtr> models;
    for (int s = 0; s < folds.S; ++s) {
        const auto train_rows = folds.rows_out(s);
        if (train_rows.empty()) {
            throw NoTrainingData("crossfit", "fold " + std::to_string(s) +
                                                 " has no out-of-fold training rows");
        }
        const Dataset train = data.subset(train_rows);
        Stream rng(seed, "adjuster", static_cast<std::uint64_t>(s));
        try {
            models.push_back(adj.fit(train, outcome, window, rng));
        } catch (const NoTrainingData& e) {
            throw NoTrainingData("crossfit", "fold " + std::to_string(s) + ": " + e.what());
        }
    }
    return models;
}

AdjustedDataset adjust(std::shared_ptr<const Dataset> data, const FoldAssignment& folds,
                       const std::vector<ModelPtr>& models, Column outcome,
                       std::string adjuster_id) {
    if (static_cast<int>(models.size()) != folds.S) {
        throw InvalidArgument("crossfit", "one model per fold is required");
    }
    AdjustedDataset out;
    out.eta = VectorXd::Zero(data->n());
    for (int s = 0; s < folds.S; ++s) {
        const auto rows = folds.rows_in(s);
        if (rows.empty()) continue;
        MatrixXd z(static_cast<Index>(rows.size()), data->d());
        for (std::size_t r = 0; r < rows.size(); ++r) z.row(r) = data->z.row(rows[r]);
        const VectorXd e = models[s]->eta(z);
        for (std::size_t r = 0; r < rows.size(); ++r) out.eta(rows[r]) = e(r);
    }
    out.m = column(*data, outcome) - out.eta;
    out.folds = folds;
    out.adjuster_id = std::move(adjuster_id);
    out.base = std::move(data);
    return out;
}

RdFit estimate_dml2(const AdjustedDataset& adj, const Kernel& k, double h, int p,
                    const NearestNeighbors& nn) {
    return local_fit(adj.base->x, adj.m, k, h, p, 0, nn);
}

RdFit estimate_dml1(const AdjustedDataset& adj, const Kernel& k, double h, int p,
                    const NearestNeighbors& nn) {
    const VectorXd sigma2 = nn.sigma2(adj.m);
    const int S = adj.folds.S;
    RdFit fit;
    fit.h = h;
    fit.p = p;
    double var = 0.0;
    for (int s = 0; s < S; ++s) {
        const auto w = fold_restricted_weights(adj.base->x, k, h, p, 0, Side::jump,
                                               adj.folds.mask(s));
        fit.tau_hat += w.apply(adj.m);
        const double se = standard_error(w, sigma2);
        var += se * se;
        fit.n_eff_left += w.n_minus;
        fit.n_eff_right += w.n_plus;
    }
    fit.tau_hat /= S;
    fit.se = std::sqrt(var) / S;
    return fit;
}

RdFit aggregate_splits(const std::vector<SplitResult>& splits) {
    if (splits.empty()) throw InvalidArgument("crossfit", "no splits to aggregate");
    std::vector<double> tau, h;
    for (const auto& s : splits) {
        tau.push_back(s.tau);
        h.push_back(s.h);
    }
    RdFit out;
    out.tau_hat = median(tau);
    std::vector<double> v;
    for (const auto& s : splits) {
        const double d = s.tau - out.tau_hat;
        v.push_back(s.se * s.se + d * d);
    }
    out.se = std::sqrt(median(v));
    out.h = median(h);
    return out;
}

RdFit repeated_splits(Index n, int S, int n_splits, std::uint64_t seed,
                      const std::function<SplitResult(const FoldAssignment&, int)>& one_split) {
    if (n_splits < 1) throw InvalidArgument("crossfit", "number of splits must be >= 1");
    std::vector<SplitResult> res;
    for (int s = 0; s < n_splits; ++s) {
        Stream rng(seed, "split", static_cast<std::uint64_t>(s));
        res.push_back(one_split(assign_folds(n, S, rng.bits()), s));
    }
    return aggregate_splits(res);
}

}  // namespace rdflex
