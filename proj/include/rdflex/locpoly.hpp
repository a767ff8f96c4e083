#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rdflex/fit.hpp"
#include "rdflex/kernels.hpp"

namespace rdflex {

using Index = Eigen::Index;

/// Sharp or fuzzy RD sample with the cutoff normalized to zero.
struct Dataset {
    Eigen::VectorXd y;
    Eigen::VectorXd x;
    Eigen::MatrixXd z;  // n x d, d may be 0
    std::optional<Eigen::VectorXd> t;
    std::vector<std::string> z_names;

    Index n() const { return x.size(); }
    Index d() const { return z.cols(); }

    /// Throws InvalidArgument when column lengths disagree or t is not 0/1.
    void validate() const;

    /// Rows selected by `rows`, in the given order.
    Dataset subset(std::span<const Index> rows) const;
};

enum class Column { y, t };

const Eigen::VectorXd& column(const Dataset& data, Column c);

/// Per-observation weights of an order-p local polynomial fit extracting the
/// v-th raw coefficient (m^{(v)}(0)/v!). Observations off the requested side,
/// outside the kernel support or outside the fold carry weight zero.
struct LocalPolyWeights {
    Side side = Side::jump;
    int v = 0;
    int p = 1;
    double h = 0.0;
    Eigen::VectorXd w;
    int n_plus = 0;   // nonzero weights at X >= 0
    int n_minus = 0;  // nonzero weights at X < 0

    /// v! sum_i w_i y_i, i.e. the derivative-scale estimate.
    double apply(const Eigen::VectorXd& outcome) const;
};

LocalPolyWeights local_poly_weights(const Eigen::VectorXd& x, const Kernel& k, double h,
                                    int p, int v, Side side);

/// As local_poly_weights with the normal equations built from the fold's
/// observations only; `in_fold[i]` marks membership.
LocalPolyWeights fold_restricted_weights(const Eigen::VectorXd& x, const Kernel& k, double h,
                                         int p, int v, Side side,
                                         const std::vector<char>& in_fold);

/// v! * (jump weights . outcome).
double rd_point_estimate(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome,
                         const Kernel& k, double h, int p, int v);
double rd_point_estimate(const Dataset& data, Column outcome, const Kernel& k, double h,
                         int p, int v);

}  // namespace rdflex
