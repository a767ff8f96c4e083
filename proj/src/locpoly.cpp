#include "rdflex/locpoly.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "rdflex/error.hpp"

namespace rdflex {

namespace {

constexpr double kMaxCondition = 1e12;

bool on_side(double x, bool plus) { return plus ? x >= 0.0 : x < 0.0; }

// Weights of one side written into `w` (which the caller zero-initializes);
// returns the number of nonzero-kernel observations used.
int side_weights(const Eigen::VectorXd& x, const Kernel& k, double h, int p, int v,
                 bool plus, const std::vector<char>* in_fold, Eigen::VectorXd& w) {
    const int m = p + 1;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd basis(m);
    int used = 0;
    for (Index i = 0; i < x.size(); ++i) {
        if (!on_side(x(i), plus) || (in_fold && !(*in_fold)[i])) continue;
        const double u = x(i) / h;
        const double kw = k(u);
        if (kw <= 0.0) continue;
        ++used;
        double pw = 1.0;
        for (int j = 0; j < m; ++j) {
            basis(j) = pw;
            pw *= u;
        }
        gram.selfadjointView<Eigen::Lower>().rankUpdate(basis, kw);
    }
    if (used < m) {
        throw InsufficientSupport("locpoly", std::to_string(used) + " usable points on the " +
                                                 (plus ? "plus" : "minus") +
                                                 " side for order " + std::to_string(p) +
                                                 " at h=" + std::to_string(h));
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const double lmin = eig.eigenvalues()(0);
    const double lmax = eig.eigenvalues()(m - 1);
    if (!(lmin > 0.0) || lmax / lmin > kMaxCondition) {
        throw SingularDesign("locpoly", "local design is rank deficient on the " +
                                            std::string(plus ? "plus" : "minus") + " side");
    }
    // a = G^{-1} e_v on the rescaled basis; coefficient on x^v is a / h^v
    const Eigen::VectorXd a = eig.eigenvectors() *
                              (eig.eigenvectors().row(v).transpose().array() /
                               eig.eigenvalues().array())
                                  .matrix();
    const double scale = std::pow(h, -v);
    for (Index i = 0; i < x.size(); ++i) {
        if (!on_side(x(i), plus) || (in_fold && !(*in_fold)[i])) continue;
        const double u = x(i) / h;
        const double kw = k(u);
        if (kw <= 0.0) continue;
        double pw = 1.0;
        double dot = 0.0;
        for (int j = 0; j < m; ++j) {
            dot += a(j) * pw;
            pw *= u;
        }
        w(i) = kw * dot * scale;
    }
    return used;
}

LocalPolyWeights weights_impl(const Eigen::VectorXd& x, const Kernel& k, double h, int p,
                              int v, Side side, const std::vector<char>* in_fold) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw InvalidArgument("locpoly", "bandwidth must be positive and finite");
    }
    if (p < 0 || v < 0 || v > p) {
        throw InvalidArgument("locpoly", "require 0 <= v <= p");
    }
    LocalPolyWeights out;
    out.side = side;
    out.v = v;
    out.p = p;
    out.h = h;
    out.w = Eigen::VectorXd::Zero(x.size());
    if (side == Side::plus || side == Side::jump) {
        out.n_plus = side_weights(x, k, h, p, v, true, in_fold, out.w);
    }
    if (side == Side::minus || side == Side::jump) {
        Eigen::VectorXd wm = Eigen::VectorXd::Zero(x.size());
        out.n_minus = side_weights(x, k, h, p, v, false, in_fold, wm);
        if (side == Side::jump) {
            out.w -= wm;
        } else {
            out.w = wm;
        }
    }
    return out;
}

}  // namespace

void Dataset::validate() const {
    const Index n = x.size();
    if (n < 1) throw InvalidArgument("locpoly", "dataset is empty");
    if (y.size() != n || (z.cols() > 0 && z.rows() != n) || (t && t->size() != n)) {
        throw InvalidArgument("locpoly", "dataset columns differ in length");
    }
    if (t) {
        for (Index i = 0; i < n; ++i) {
            if ((*t)(i) != 0.0 && (*t)(i) != 1.0) {
                throw InvalidArgument("locpoly", "treatment column must contain only 0 and 1");
            }
        }
    }
}

Dataset Dataset::subset(std::span<const Index> rows) const {
    Dataset out;
    const auto m = static_cast<Index>(rows.size());
    out.y.resize(m);
    out.x.resize(m);
    out.z.resize(m, z.cols());
    if (t) out.t = Eigen::VectorXd(m);
    for (Index r = 0; r < m; ++r) {
        const Index i = rows[r];
        out.y(r) = y(i);
        out.x(r) = x(i);
        if (z.cols() > 0) out.z.row(r) = z.row(i);
        if (t) (*out.t)(r) = (*t)(i);
    }
    out.z_names = z_names;
    return out;
}

const Eigen::VectorXd& column(const Dataset& data, Column c) {
    if (c == Column::y) return data.y;
    if (!data.t) throw MissingTreatment("locpoly", "dataset has no treatment column");
    return *data.t;
}

double LocalPolyWeights::apply(const Eigen::VectorXd& outcome) const {
    return factorial(v) * w.dot(outcome);
}

LocalPolyWeights local_poly_weights(const Eigen::VectorXd& x, const Kernel& k, double h,
                                    int p, int v, Side side) {
    return weights_impl(x, k, h, p, v, side, nullptr);
}

LocalPolyWeights fold_restricted_weights(const Eigen::VectorXd& x, const Kernel& k, double h,
                                         int p, int v, Side side,
                                         const std::vector<char>& in_fold) {
    if (static_cast<Index>(in_fold.size()) != x.size()) {
        throw InvalidArgument("locpoly", "fold mask length differs from sample size");
    }
    return weights_impl(x, k, h, p, v, side, &in_fold);
}

double rd_point_estimate(const Eigen::VectorXd& x, const Eigen::VectorXd& outcome,
                         const Kernel& k, double h, int p, int v) {
    return local_poly_weights(x, k, h, p, v, Side::jump).apply(outcome);
}

double rd_point_estimate(const Dataset& data, Column outcome, const Kernel& k, double h,
                         int p, int v) {
    return rd_point_estimate(data.x, column(data, outcome), k, h, p, v);
}

}  // namespace rdflex
