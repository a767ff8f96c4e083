#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rdflex/bandwidth.hpp"
#include "rdflex/crossfit.hpp"
#include "rdflex/fit.hpp"
#include "rdflex/fuzzy.hpp"
#include "rdflex/locpoly.hpp"

namespace rdflex {

enum class BandwidthPolicy { auto_mse, auto_ba, fixed, undersmooth };

struct BandwidthChoice {
    BandwidthPolicy policy = BandwidthPolicy::auto_ba;
    double fixed_h = 0.0;
};

/// "auto-mse", "auto-ba", "undersmooth" or "fixed=H".
BandwidthChoice parse_bandwidth(const std::string& s);
std::string to_string(const BandwidthChoice& b);

/// Settings of one second-stage estimator; the defaults are the sharp
/// bias-aware local linear estimator with a triangular kernel.
struct EstimatorConfig {
    Kernel kernel{KernelKind::triangular};
    int p = 1;
    // zero | linear | ridge | lasso | knn | ensemble | oracle | oracle-limit | linear-nocf | linear-cf
    std::string adjuster = "zero";
    // basis expansion for the lasso: none | poly2 | hermite:N
    std::string lasso_basis = "none";
    int folds = 5;
    int splits = 1;
    std::optional<double> window;  // first-stage b; default twice the baseline bandwidth
    BandwidthChoice bandwidth;
    CiMethod ci = CiMethod::bias_aware;
    double alpha = 0.05;
    double smoothness = 2.0;
    BiasAwareCriterion ba_criterion = BiasAwareCriterion::mse;
    NnVarianceConfig nn;
    bool dml1 = false;
};

struct SharpResult {
    RdFit fit;
    BandwidthSelection bandwidth;  // of the last split
    double baseline_h = 0.0;       // bandwidth for the unadjusted outcome
    double window_b = 0.0;
    std::vector<Index> train_sizes;  // out-of-fold rows per fold, last split
    RdFit adjustment_jump;           // jump in eta_{s(i)}(Z_i) at the final h
    Eigen::VectorXd eta;             // adjustment terms of the last split
};

/// Validates and resolves adjuster ids; throws InvalidArgument.
void validate(const EstimatorConfig& cfg);

BandwidthSelection select_bandwidth(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome,
                                    const EstimatorConfig& cfg, const NearestNeighbors& nn);

/// Fit plus interval at bandwidth h on the given outcome column.
RdFit fit_with_ci(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome,
                  const EstimatorConfig& cfg, double h, const NearestNeighbors& nn);

/// Known adjustments of a simulation design. `limit(b)` is the population
/// limit of a localized first stage with a uniform window of half-width b.
struct OracleAdjustments {
    EtaFn optimal;
    std::function<EtaFn(double b)> limit;
};

/// Full sharp pipeline: baseline bandwidth, folds, first stage, adjusted
/// outcome, bandwidth, estimate and interval, aggregated over splits.
/// `oracle` is required for adjusters "oracle" and "oracle-limit".
SharpResult estimate_sharp(std::shared_ptr<const Dataset> data, const EstimatorConfig& cfg,
                           std::uint64_t seed, const OracleAdjustments* oracle = nullptr);

struct FuzzyResult {
    FuzzyFit fit;
    BandwidthSelection bandwidth;
    double window_b = 0.0;
};

/// Fuzzy pipeline: bandwidth chosen on the adjusted Y equation and shared
/// with the T equation.
FuzzyResult estimate_fuzzy_pipeline(std::shared_ptr<const Dataset> data,
                                    const EstimatorConfig& cfg, std::uint64_t seed);

/// The first-stage learner named by the config (with the lasso basis applied).
std::shared_ptr<const Learner> learner_for(const EstimatorConfig& cfg);

}  // namespace rdflex
