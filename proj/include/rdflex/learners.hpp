#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rdflex/rng.hpp"

namespace rdflex {

/// A fitted regression function of the covariates.
class Regressor {
public:
    virtual ~Regressor() = default;
    virtual Eigen::VectorXd predict(const Eigen::MatrixXd& z) const = 0;
};

/// Weighted regression of y on z. Weights are kernel weights of the
/// localized loss and are nonnegative with a positive sum.
class Learner {
public:
    virtual ~Learner() = default;
    virtual std::unique_ptr<Regressor> fit(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                           const Eigen::VectorXd& w, Stream& rng) const = 0;
    virtual std::string name() const = 0;
};

using BasisFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

/// Weighted least squares on (1, z); rank deficiency resolved by the
/// minimum-norm solution.
class LinearLearner : public Learner {
public:
    std::unique_ptr<Regressor> fit(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& w, Stream& rng) const override;
    std::string name() const override { return "linear"; }
};

/// Ridge on standardized z with the penalty chosen by generalized
/// cross-validation over a log grid.
class RidgeLearner : public Learner {
public:
    int grid_points = 60;
    std::unique_ptr<Regressor> fit(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& w, Stream& rng) const override;
    std::string name() const override { return "ridge"; }
};

struct LassoPath {
    std::vector<double> lambda;
    std::vector<Eigen::VectorXd> beta;  // standardized scale
};

/// Lasso by covariance-mode coordinate descent on standardized features,
/// penalty chosen by K-fold cross-validation (minimum CV error). An optional
/// basis expansion is applied to z before standardization.
class LassoLearner : public Learner {
public:
    int n_lambda = 50;
    double lambda_min_ratio = 1e-3;
    int cv_folds = 5;
    double tol = 1e-9;  // squared coefficient change relative to var(y)
    int max_sweeps = 1000;
    BasisFn basis;

    std::unique_ptr<Regressor> fit(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& w, Stream& rng) const override;
    std::string name() const override { return "lasso"; }
};

/// Solves min_b 1/2 b'Gb - c'b + lambda |b|_1 for each lambda (decreasing),
/// warm-starting along the path.
LassoPath lasso_path_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& c,
                          const std::vector<double>& lambdas, double tol, int max_sweeps);

/// Weighted k-nearest-neighbor mean in standardized z, k = max(5, round(sqrt(n))).
class KnnLearner : public Learner {
public:
    int k = 0;  // 0 selects the default rule
    std::unique_ptr<Regressor> fit(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& w, Stream& rng) const override;
    std::string name() const override { return "knn"; }
};

/// Convex combination of member learners with weights from nonnegative least
/// squares on inner cross-validated predictions.
class EnsembleLearner : public Learner {
public:
    std::vector<std::shared_ptr<const Learner>> members;
    int cv_folds = 5;

    std::unique_ptr<Regressor> fit(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& w, Stream& rng) const override;
    std::string name() const override { return "ensemble"; }
};

/// Lawson-Hanson nonnegative least squares: argmin_{a >= 0} |A a - b|.
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

/// Probabilists' Hermite polynomial He_k(t).
double hermite_he(int k, double t);

/// Multivariate Hermite terms prod_j He_{a_j}(z_j) ordered by total degree,
/// then lexicographically by the multiset of coordinates (z1 first), skipping
/// the constant. The first d terms are the coordinates themselves.
std::vector<std::vector<int>> hermite_multi_indices(int d, int n_terms);

Eigen::MatrixXd hermite_basis(const Eigen::MatrixXd& z, int n_terms);

/// Columns of z, their powers up to `degree`, and pairwise products when
/// `interactions` is set.
Eigen::MatrixXd polynomial_basis(const Eigen::MatrixXd& z, int degree, bool interactions);

std::shared_ptr<const Learner> make_learner(const std::string& name);

}  // namespace rdflex
