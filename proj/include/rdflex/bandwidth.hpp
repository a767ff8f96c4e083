#pragma once

#include <optional>
#include <string>

#include <Eigen/Core>

#include "rdflex/inference.hpp"
#include "rdflex/kernels.hpp"

namespace rdflex {

enum class BandwidthMethod { cct_mse, bias_aware, undersmooth, fixed };

std::string to_string(BandwidthMethod m);

struct CctIntermediates {
    double v_n = 0.0;
    double gamma4_plus = 0.0, gamma4_minus = 0.0;
    double C_n = 0.0, c_n = 0.0;
    double B_n = 0.0, b_n = 0.0;
    double H_n = 0.0;
    // Step 1-2 outputs recomputed without the +3 se^2 terms, for sensitivity.
    double b_n_noreg = 0.0, h_n_noreg = 0.0;
};

struct BandwidthSelection {
    double h = 0.0;
    BandwidthMethod method = BandwidthMethod::fixed;
    std::optional<CctIntermediates> intermediates;
};

/// 2.58 min(S_X, IQR/1.349) n^{-1/5}, sample SD and type-7 quartiles.
double pilot_v_n(const Eigen::VectorXd& x);
double pilot_v_n(double sd, double iqr, Index n);

/// Three-step MSE-optimal bandwidth for the local linear jump in `outcome`.
BandwidthSelection select_cct_mse(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome,
                                  const Kernel& k, const NearestNeighbors& nn);
BandwidthSelection select_cct_mse(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome,
                                  const Kernel& k, NnVarianceConfig cfg = {});

enum class BiasAwareCriterion {
    mse,   // worst-case bias^2 + se^2
    flci,  // half-length z_alpha(|b|/se) se
};

BiasAwareCriterion parse_bias_aware_criterion(const std::string& s);

struct BiasAwareOptions {
    double smoothness = 2.0;
    double alpha = 0.05;
    BiasAwareCriterion criterion = BiasAwareCriterion::mse;
    int grid_points = 60;
    double rel_tol = 1e-4;
};

BandwidthSelection select_bias_aware(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome,
                                     const Kernel& k, const BiasAwareOptions& opt,
                                     const NearestNeighbors& nn);

/// base.h * n^{-1/20}
BandwidthSelection select_undersmooth(const BandwidthSelection& base, Index n);

}  // namespace rdflex
