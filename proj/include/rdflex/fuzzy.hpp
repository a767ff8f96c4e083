#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "rdflex/crossfit.hpp"
#include "rdflex/fit.hpp"
#include "rdflex/inference.hpp"

namespace rdflex {

struct FuzzyFit {
    double theta_hat = 0.0;
    double tau_y = 0.0;
    double tau_t = 0.0;
    double se = 0.0;
    double se_t = 0.0;
    double h = 0.0;
    double first_stage_strength = 0.0;  // |tau_t| / se_t
    std::optional<ConfidenceInterval> ci;
};

struct FuzzyOptions {
    double weak_floor = 1e-6;
    double strength_warning = 4.0;
    double alpha = 0.05;
};

/// Ratio of the jumps in the adjusted outcome and adjusted treatment, both
/// with the same weights. The standard error applies the NN variance to the
/// composite residual (m_y - theta m_t) / tau_t.
FuzzyFit fuzzy_from_adjusted(const Eigen::VectorXd& x, const Eigen::VectorXd& m_y,
                             const Eigen::VectorXd& m_t, const Kernel& k, double h, int p,
                             const NearestNeighbors& nn, const FuzzyOptions& opt = {});

/// Cross-fits separate adjusters for Y and T on the same folds, then
/// fuzzy_from_adjusted.
FuzzyFit estimate_fuzzy(std::shared_ptr<const Dataset> data, const Kernel& k, double h, int p,
                        const FoldAssignment& folds, const Adjuster& adj_y,
                        const Adjuster& adj_t, const LocalizationWindow& window,
                        std::uint64_t seed, const NearestNeighbors& nn,
                        const FuzzyOptions& opt = {});

}  // namespace rdflex
