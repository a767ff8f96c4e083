#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rdflex/fit.hpp"
#include "rdflex/inference.hpp"
#include "rdflex/kernels.hpp"
#include "rdflex/learners.hpp"
#include "rdflex/locpoly.hpp"
#include "rdflex/rng.hpp"

namespace rdflex {

struct FoldAssignment {
    Index n = 0;
    int S = 1;
    std::vector<int> fold_of;

    std::vector<Index> rows_in(int s) const;
    std::vector<Index> rows_out(int s) const;
    std::vector<char> mask(int s) const;
    std::vector<Index> sizes() const;
};

/// Seeded shuffle, then position r goes to fold r mod S.
FoldAssignment assign_folds(Index n, int S, std::uint64_t seed);

struct LocalizationWindow {
    double b = 1.0;
    Kernel kernel{KernelKind::uniform};
};

class AdjustmentModel {
public:
    virtual ~AdjustmentModel() = default;
    virtual Eigen::VectorXd eta(const Eigen::MatrixXd& z) const = 0;
};

using ModelPtr = std::shared_ptr<const AdjustmentModel>;

class Adjuster {
public:
    virtual ~Adjuster() = default;
    /// Fits on `train` only; `outcome` selects Y or T.
    virtual ModelPtr fit(const Dataset& train, Column outcome, const LocalizationWindow& window,
                         Stream& rng) const = 0;
    virtual std::string id() const = 0;
};

using AdjusterPtr = std::shared_ptr<const Adjuster>;

class ZeroAdjuster : public Adjuster {
public:
    ModelPtr fit(const Dataset&, Column, const LocalizationWindow&, Stream&) const override;
    std::string id() const override { return "zero"; }
};

class ConstantAdjuster : public Adjuster {
public:
    explicit ConstantAdjuster(double c) : c_(c) {}
    ModelPtr fit(const Dataset&, Column, const LocalizationWindow&, Stream&) const override;
    std::string id() const override { return "constant"; }

private:
    double c_;
};

using EtaFn = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

/// Known adjustment function, e.g. the closed-form optimum of a simulation DGP.
class OracleAdjuster : public Adjuster {
public:
    explicit OracleAdjuster(EtaFn f) : f_(std::move(f)) {}
    ModelPtr fit(const Dataset&, Column, const LocalizationWindow&, Stream&) const override;
    std::string id() const override { return "oracle"; }

private:
    EtaFn f_;
};

/// mu+ fit on 0 <= X < b and mu- on -b < X < 0, each with weights K(X/b);
/// eta = (mu+ + mu-)/2.
class LocalizedAdjuster : public Adjuster {
public:
    explicit LocalizedAdjuster(std::shared_ptr<const Learner> learner)
        : learner_(std::move(learner)) {}
    ModelPtr fit(const Dataset& train, Column outcome, const LocalizationWindow& window,
                 Stream& rng) const override;
    std::string id() const override { return learner_->name(); }

private:
    std::shared_ptr<const Learner> learner_;
};

/// Kernel-weighted regression of the outcome on the order-p RD terms
/// (1, X..X^p, T, T X..T X^p) and Z at bandwidth h; eta(z) = z' gamma.
/// The window argument of fit is ignored.
class JointLinearAdjuster : public Adjuster {
public:
    JointLinearAdjuster(Kernel k, double h, int p) : k_(k), h_(h), p_(p) {}
    ModelPtr fit(const Dataset& train, Column outcome, const LocalizationWindow& window,
                 Stream& rng) const override;
    std::string id() const override { return "linear-joint"; }

    /// gamma only, for tests and diagnostics.
    Eigen::VectorXd gamma(const Dataset& train, Column outcome) const;

private:
    Kernel k_;
    double h_;
    int p_;
};

/// Model s is trained on the rows outside fold s. Throws NoTrainingData if
/// a fold has no out-of-fold rows.
std::vector<ModelPtr> fit_adjusters(const Dataset& data, const FoldAssignment& folds,
                                    const Adjuster& adj, const LocalizationWindow& window,
                                    Column outcome, std::uint64_t seed);

struct AdjustedDataset {
    std::shared_ptr<const Dataset> base;
    Eigen::VectorXd eta;  // eta_{s(i)}(Z_i)
    Eigen::VectorXd m;    // outcome minus eta
    FoldAssignment folds;
    std::string adjuster_id;
};

AdjustedDataset adjust(std::shared_ptr<const Dataset> data, const FoldAssignment& folds,
                       const std::vector<ModelPtr>& models, Column outcome = Column::y,
                       std::string adjuster_id = "");

/// Full-sample weights applied to the adjusted outcome, with NN standard error.
RdFit estimate_dml2(const AdjustedDataset& adj, const Kernel& k, double h, int p,
                    const NearestNeighbors& nn);

/// Average of per-fold estimates with fold-restricted weights; the standard
/// error is sqrt(sum_s se_s^2)/S.
RdFit estimate_dml1(const AdjustedDataset& adj, const Kernel& k, double h, int p,
                    const NearestNeighbors& nn);

struct SplitResult {
    double tau = 0.0;
    double se = 0.0;
    double h = 0.0;
};

/// Median estimate, SE sqrt(median(se_s^2 + (tau_s - median)^2)), median h.
RdFit aggregate_splits(const std::vector<SplitResult>& splits);

/// Runs `one_split(folds, split_index)` for split seeds derived from `seed`
/// and aggregates.
RdFit repeated_splits(Index n, int S, int n_splits, std::uint64_t seed,
                      const std::function<SplitResult(const FoldAssignment&, int)>& one_split);

}  // namespace rdflex
