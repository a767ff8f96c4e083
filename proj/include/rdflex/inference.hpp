#pragma once

#include <vector>

#include <Eigen/Core>

#include "rdflex/fit.hpp"
#include "rdflex/kernels.hpp"
#include "rdflex/locpoly.hpp"

namespace rdflex {

struct NnVarianceConfig {
    int R = 3;
    // scale squared residuals by R/(R+1) so that E[sigma2_i] = sigma_i^2 under
    // homoskedastic noise; false gives the uncorrected squared residual
    bool dof_correction = true;
};

/// Same-side nearest neighbors in the running variable, precomputed once per
/// sample so that variances of several outcome columns reuse the search.
/// Ties in |X_i - X_j| go to the smaller index; i itself is never a neighbor.
class NearestNeighbors {
public:
    NearestNeighbors(const Eigen::VectorXd& x, NnVarianceConfig cfg = {});

    /// sigma2_i = c (M_i - mean of M over the R neighbors of i)^2, c = R/(R+1) or 1
    Eigen::VectorXd sigma2(const Eigen::VectorXd& outcome) const;

    int R() const { return R_; }
    const std::vector<Index>& neighbors_of(Index i) const { return nbrs_[i]; }

private:
    int R_;
    double scale_;
    std::vector<std::vector<Index>> nbrs_;
};

Eigen::VectorXd nn_sigma2(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome,
                          NnVarianceConfig cfg = {});

/// v! sqrt(sum_i w_i^2 sigma2_i)
double standard_error(const LocalPolyWeights& w, const Eigen::VectorXd& sigma2);

double normal_cdf(double x);

/// 1 - alpha/2 quantile of |N(r, 1)|.
double z_crit(double alpha, double r);

/// Order-p fit of the jump in the v-th derivative with its NN standard error.
RdFit local_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome, const Kernel& k,
                double h, int p, int v, const NearestNeighbors& nn);

/// tau_hat +- z_{alpha} se for a fit computed at an undersmoothed bandwidth.
ConfidenceInterval ci_undersmoothing(const RdFit& fit, double alpha);

/// Local quadratic estimate and its standard error at h; returns the p=2 fit
/// with the interval attached.
RdFit ci_rbc(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome, const Kernel& k,
             double h, double alpha, const NearestNeighbors& nn);

/// -B_Y/2 sum_i w_i X_i^2 sign(X_i) for local linear jump weights.
double bias_bound(const LocalPolyWeights& w, const Eigen::VectorXd& x, double smoothness);

/// Local linear estimate with the interval tau_hat +- z_alpha(|b|/se) se.
RdFit ci_bias_aware(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome, const Kernel& k,
                    double h, double alpha, double smoothness, const NearestNeighbors& nn);

}  // namespace rdflex
