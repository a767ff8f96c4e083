#include "rdflex/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include <Eigen/Dense>

#include "rdflex/error.hpp"
#include "rdflex/log.hpp"

namespace rdflex {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_inputs(const MatrixXd& z, const VectorXd& y, const VectorXd& w) {
    if (z.rows() != y.size() || w.size() != y.size()) {
        throw InvalidArgument("learners", "training inputs differ in length");
    }
    if (!(w.sum() > 0.0)) throw NoTrainingData("learners", "training weights sum to zero");
}

// Weighted column means and SDs; columns with no spread are dropped.
struct Standardizer {
    std::vector<Eigen::Index> keep;
    VectorXd mean;
    VectorXd sd;

    Standardizer(const MatrixXd& z, const VectorXd& w, const char* who) {
        const double sw = w.sum();
        const VectorXd mu = z.transpose() * w / sw;
        int dropped = 0;
        std::vector<double> m, s;
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            const double var = (w.array() * (z.col(j).array() - mu(j)).square()).sum() / sw;
            if (var > 1e-24 * (1.0 + mu(j) * mu(j))) {
                keep.push_back(j);
                m.push_back(mu(j));
                s.push_back(std::sqrt(var));
            } else {
                ++dropped;
            }
        }
        if (dropped > 0) {
            warn(who, std::to_string(dropped) + " covariate(s) without variation dropped");
        }
        mean = Eigen::Map<VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
        sd = Eigen::Map<VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    }

    MatrixXd apply(const MatrixXd& z) const {
        MatrixXd out(z.rows(), static_cast<Eigen::Index>(keep.size()));
        for (std::size_t j = 0; j < keep.size(); ++j) {
            out.col(j) = (z.col(keep[j]).array() - mean(j)) / sd(j);
        }
        return out;
    }
};

// Intercept plus coefficients on standardized (or raw) features.
class LinearModel : public Regressor {
public:
    LinearModel(double intercept, VectorXd beta, std::optional<Standardizer> st, BasisFn basis)
        : intercept_(intercept), beta_(std::move(beta)), st_(std::move(st)),
          basis_(std::move(basis)) {}

    VectorXd predict(const MatrixXd& z) const override {
        const MatrixXd zb = basis_ ? basis_(z) : z;
        const MatrixXd f = st_ ? st_->apply(zb) : zb;
        VectorXd out = VectorXd::Constant(z.rows(), intercept_);
        if (beta_.size() > 0) out += f * beta_;
        return out;
    }

private:
    double intercept_;
    VectorXd beta_;
    std::optional<Standardizer> st_;
    BasisFn basis_;
};

std::vector<int> draw_folds(Eigen::Index m, int k, Stream& rng) {
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<int> fold(static_cast<std::size_t>(m));
    for (std::size_t r = 0; r < perm.size(); ++r) fold[perm[r]] = static_cast<int>(r % k);
    return fold;
}

class ConstantModel : public Regressor {
public:
    explicit ConstantModel(double c) : c_(c) {}
    VectorXd predict(const MatrixXd& z) const override {
        return VectorXd::Constant(z.rows(), c_);
    }

private:
    double c_;
};

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

class KnnModel : public Regressor {
public:
    KnnModel(Standardizer st, MatrixXd train, VectorXd y, VectorXd w, int k)
        : st_(std::move(st)), train_(std::move(train)), y_(std::move(y)), w_(std::move(w)),
          k_(k) {}

    VectorXd predict(const MatrixXd& z) const override {
        const MatrixXd q = st_.apply(z);
        const Eigen::Index m = train_.rows();
        VectorXd out(z.rows());
        std::vector<std::pair<double, Eigen::Index>> d(static_cast<std::size_t>(m));
        for (Eigen::Index r = 0; r < q.rows(); ++r) {
            for (Eigen::Index i = 0; i < m; ++i) {
                d[i] = {(train_.row(i) - q.row(r)).squaredNorm(), i};
            }
            std::partial_sort(d.begin(), d.begin() + k_, d.end());
            double num = 0.0, den = 0.0;
            for (int j = 0; j < k_; ++j) {
                num += w_(d[j].second) * y_(d[j].second);
                den += w_(d[j].second);
            }
            out(r) = num / den;
        }
        return out;
    }

private:
    Standardizer st_;
    MatrixXd train_;
    VectorXd y_, w_;
    int k_;
};

class EnsembleModel : public Regressor {
public:
    EnsembleModel(std::vector<std::unique_ptr<Regressor>> members, VectorXd weights)
        : members_(std::move(members)), weights_(std::move(weights)) {}

    VectorXd predict(const MatrixXd& z) const override {
        VectorXd out = VectorXd::Zero(z.rows());
        for (std::size_t j = 0; j < members_.size(); ++j) {
            if (weights_(j) != 0.0) out += weights_(j) * members_[j]->predict(z);
        }
        return out;
    }

private:
    std::vector<std::unique_ptr<Regressor>> members_;
    VectorXd weights_;
};

// Training rows with positive weight only; zero-weight rows carry no
// information for any of the learners.
struct Active {
    MatrixXd z;
    VectorXd y, w;
};

Active positive_rows(const MatrixXd& z, const VectorXd& y, const VectorXd& w) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) > 0.0) rows.push_back(i);
    }
    Active a;
    const auto m = static_cast<Eigen::Index>(rows.size());
    a.z.resize(m, z.cols());
    a.y.resize(m);
    a.w.resize(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        a.z.row(r) = z.row(rows[r]);
        a.y(r) = y(rows[r]);
        a.w(r) = w(rows[r]);
    }
    return a;
}

}  // namespace

std::unique_ptr<Regressor> LinearLearner::fit(const MatrixXd& z, const VectorXd& y,
                                              const VectorXd& w, Stream&) const {
    check_inputs(z, y, w);
    const Eigen::Index m = z.rows();
    MatrixXd a(m, z.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(z.cols()) = z;
    const VectorXd sw = w.cwiseSqrt();
    const MatrixXd aw = sw.asDiagonal() * a;
    const VectorXd yw = sw.cwiseProduct(y);
    const VectorXd coef = Eigen::CompleteOrthogonalDecomposition<MatrixXd>(aw).solve(yw);
    return std::make_unique<LinearModel>(coef(0), coef.tail(z.cols()), std::nullopt, nullptr);
}

std::unique_ptr<Regressor> RidgeLearner::fit(const MatrixXd& z, const VectorXd& y,
                                             const VectorXd& w, Stream&) const {
    check_inputs(z, y, w);
    const Active act = positive_rows(z, y, w);
    Standardizer st(act.z, act.w, "ridge");
    const double sw = act.w.sum();
    const double ybar = act.w.dot(act.y) / sw;
    if (st.keep.empty()) return std::make_unique<ConstantModel>(ybar);

    const VectorXd root = act.w.cwiseSqrt();
    const MatrixXd xs = root.asDiagonal() * st.apply(act.z);
    const VectorXd r = root.cwiseProduct((act.y.array() - ybar).matrix());
    Eigen::BDCSVD<MatrixXd> svd(xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd d = svd.singularValues();
    const VectorXd ur = svd.matrixU().transpose() * r;
    const double r2 = r.squaredNorm();
    const double m = static_cast<double>(act.y.size());
    const double top = std::max(d.size() > 0 ? d(0) * d(0) : 1.0, 1e-300);

    double best_lambda = top;
    double best_gcv = std::numeric_limits<double>::infinity();
    for (int g = 0; g < grid_points; ++g) {
        const double lambda = top * std::pow(10.0, -6.0 + 9.0 * g / (grid_points - 1));
        double df = 1.0;  // intercept
        double fit_proj = 0.0;
        for (Eigen::Index j = 0; j < d.size(); ++j) {
            const double s = d(j) * d(j) / (d(j) * d(j) + lambda);
            df += s;
            fit_proj += (2.0 * s - s * s) * ur(j) * ur(j);
        }
        const double rss = std::max(r2 - fit_proj, 0.0);
        const double denom = 1.0 - df / m;
        if (denom <= 0.0) continue;
        const double gcv = rss / m / (denom * denom);
        if (gcv < best_gcv) {
            best_gcv = gcv;
            best_lambda = lambda;
        }
    }
    VectorXd shrink(d.size());
    for (Eigen::Index j = 0; j < d.size(); ++j) {
        shrink(j) = d(j) / (d(j) * d(j) + best_lambda);
    }
    const VectorXd beta = svd.matrixV() * shrink.cwiseProduct(ur);
    return std::make_unique<LinearModel>(ybar, beta, std::move(st), nullptr);
}

LassoPath lasso_path_gram(const MatrixXd& gram, const VectorXd& c,
                          const std::vector<double>& lambdas, double tol, int max_sweeps) {
    const Eigen::Index p = c.size();
    LassoPath path;
    path.lambda = lambdas;
    VectorXd beta = VectorXd::Zero(p);
    VectorXd grad = c;  // c - G beta
    std::vector<char> active(static_cast<std::size_t>(p), 0);

    auto update = [&](Eigen::Index j, double lambda) {
        const double gjj = gram(j, j);
        if (gjj <= 0.0) return 0.0;
        const double old = beta(j);
        const double nb = soft_threshold(grad(j) + gjj * old, lambda) / gjj;
        const double delta = nb - old;
        if (delta != 0.0) {
            beta(j) = nb;
            grad.noalias() -= delta * gram.col(j);
            if (nb != 0.0) active[j] = 1;
        }
        return std::abs(delta) * std::sqrt(gjj);
    };

    for (const double lambda : lambdas) {
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            double worst = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) worst = std::max(worst, update(j, lambda));
            if (worst < tol) break;
            // iterate on the active set until it settles, then re-check all
            for (int inner = 0; inner < max_sweeps; ++inner) {
                double w_in = 0.0;
                for (Eigen::Index j = 0; j < p; ++j) {
                    if (active[j]) w_in = std::max(w_in, update(j, lambda));
                }
                if (w_in < tol) break;
            }
        }
        path.beta.push_back(beta);
    }
    return path;
}

std::unique_ptr<Regressor> LassoLearner::fit(const MatrixXd& z, const VectorXd& y,
                                             const VectorXd& w, Stream& rng) const {
    check_inputs(z, y, w);
    const Active act = positive_rows(z, y, w);
    const MatrixXd zb = basis ? basis(act.z) : act.z;
    Standardizer st(zb, act.w, "lasso");
    const double sw = act.w.sum();
    const double ybar = act.w.dot(act.y) / sw;
    if (st.keep.empty()) return std::make_unique<ConstantModel>(ybar);

    const MatrixXd xs = st.apply(zb);
    const Eigen::Index m = xs.rows();
    const Eigen::Index p = xs.cols();

    // full-sample problem; xs is weighted-centered, so no intercept terms
    const MatrixXd xw = act.w.asDiagonal() * xs;
    const MatrixXd gram_full = xs.transpose() * xw / sw;
    const VectorXd yc = (act.y.array() - ybar).matrix();
    const VectorXd c_full = xw.transpose() * yc / sw;

    const double ytol = std::sqrt(tol * act.w.dot(yc.cwiseProduct(yc)) / sw);
    const double lmax = c_full.cwiseAbs().maxCoeff();
    if (!(lmax > 0.0)) return std::make_unique<LinearModel>(ybar, VectorXd::Zero(p), std::move(st), basis);
    std::vector<double> lambdas(static_cast<std::size_t>(n_lambda));
    for (int l = 0; l < n_lambda; ++l) {
        lambdas[l] = lmax * std::pow(lambda_min_ratio, static_cast<double>(l) / (n_lambda - 1));
    }

    std::size_t pick = lambdas.size() - 1;
    const int k = static_cast<int>(std::min<Eigen::Index>(cv_folds, m));
    if (k >= 2) {
        const auto fold = draw_folds(m, k, rng);
        // uncentered weighted sums per fold; complements by subtraction
        std::vector<double> fw(k, 0.0), fyy(k, 0.0);
        std::vector<VectorXd> fx(k, VectorXd::Zero(p)), fxy(k, VectorXd::Zero(p));
        std::vector<double> fy(k, 0.0);
        std::vector<MatrixXd> fxx(k, MatrixXd::Zero(p, p));
        std::vector<std::vector<Eigen::Index>> members(k);
        for (Eigen::Index i = 0; i < m; ++i) members[fold[i]].push_back(i);
        for (int f = 0; f < k; ++f) {
            const auto mf = static_cast<Eigen::Index>(members[f].size());
            MatrixXd xf(mf, p);
            VectorXd yf(mf), wf(mf);
            for (Eigen::Index r = 0; r < mf; ++r) {
                xf.row(r) = xs.row(members[f][r]);
                yf(r) = yc(members[f][r]);
                wf(r) = act.w(members[f][r]);
            }
            fw[f] = wf.sum();
            fy[f] = wf.dot(yf);
            fx[f] = xf.transpose() * wf;
            fxy[f] = xf.transpose() * wf.cwiseProduct(yf);
            fxx[f] = xf.transpose() * wf.asDiagonal() * xf;
        }
        const double tw = std::accumulate(fw.begin(), fw.end(), 0.0);
        const double ty = std::accumulate(fy.begin(), fy.end(), 0.0);
        const VectorXd tx = xs.transpose() * act.w;
        const VectorXd txy = xw.transpose() * yc;
        const MatrixXd txx = gram_full * sw;

        std::vector<double> cv_err(lambdas.size(), 0.0);
        for (int f = 0; f < k; ++f) {
            const double w_tr = tw - fw[f];
            if (!(w_tr > 0.0) || members[f].empty()) continue;
            const VectorXd mx = (tx - fx[f]) / w_tr;
            const double my = (ty - fy[f]) / w_tr;
            const MatrixXd g = (txx - fxx[f]) / w_tr - mx * mx.transpose();
            const VectorXd c = (txy - fxy[f]) / w_tr - mx * my;
            const LassoPath path = lasso_path_gram(g, c, lambdas, ytol, max_sweeps);
            for (Eigen::Index i : members[f]) {
                const VectorXd xi = xs.row(i).transpose() - mx;
                const double yi = yc(i) - my;
                for (std::size_t l = 0; l < lambdas.size(); ++l) {
                    const double e = yi - xi.dot(path.beta[l]);
                    cv_err[l] += act.w(i) * e * e;
                }
            }
        }
        pick = static_cast<std::size_t>(
            std::min_element(cv_err.begin(), cv_err.end()) - cv_err.begin());
    }
    std::vector<double> used(lambdas.begin(), lambdas.begin() + static_cast<long>(pick) + 1);
    const LassoPath full = lasso_path_gram(gram_full, c_full, used, ytol, max_sweeps);
    return std::make_unique<LinearModel>(ybar, full.beta.back(), std::move(st), basis);
}

std::unique_ptr<Regressor> KnnLearner::fit(const MatrixXd& z, const VectorXd& y,
                                           const VectorXd& w, Stream&) const {
    check_inputs(z, y, w);
    Active act = positive_rows(z, y, w);
    Standardizer st(act.z, act.w, "knn");
    const auto m = act.y.size();
    int kk = k > 0 ? k : std::max(5, static_cast<int>(std::lround(std::sqrt(double(m)))));
    kk = static_cast<int>(std::min<Eigen::Index>(kk, m));
    MatrixXd train = st.apply(act.z);
    return std::make_unique<KnnModel>(std::move(st), std::move(train), std::move(act.y),
                                      std::move(act.w), kk);
}

VectorXd nnls(const MatrixXd& a, const VectorXd& b) {
    const Eigen::Index p = a.cols();
    VectorXd x = VectorXd::Zero(p);
    std::vector<char> passive(static_cast<std::size_t>(p), 0);
    const double tol = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff() * b.cwiseAbs().maxCoeff());

    auto solve_passive = [&]() {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (passive[j]) idx.push_back(j);
        }
        MatrixXd ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) ap.col(j) = a.col(idx[j]);
        const VectorXd s = Eigen::CompleteOrthogonalDecomposition<MatrixXd>(ap).solve(b);
        VectorXd full = VectorXd::Zero(p);
        for (std::size_t j = 0; j < idx.size(); ++j) full(idx[j]) = s(j);
        return full;
    };

    for (int outer = 0; outer < 3 * p + 10; ++outer) {
        const VectorXd grad = a.transpose() * (b - a * x);
        Eigen::Index jmax = -1;
        double gmax = tol;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (!passive[j] && grad(j) > gmax) {
                gmax = grad(j);
                jmax = j;
            }
        }
        if (jmax < 0) break;
        passive[jmax] = 1;
        for (int inner = 0; inner < 3 * p + 10; ++inner) {
            const VectorXd s = solve_passive();
            bool feasible = true;
            for (Eigen::Index j = 0; j < p; ++j) {
                if (passive[j] && s(j) <= 0.0) feasible = false;
            }
            if (feasible) {
                x = s;
                break;
            }
            double alpha = 1.0;
            for (Eigen::Index j = 0; j < p; ++j) {
                if (passive[j] && s(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - s(j)));
            }
            x += alpha * (s - x);
            for (Eigen::Index j = 0; j < p; ++j) {
                if (passive[j] && x(j) <= 1e-15) {
                    passive[j] = 0;
                    x(j) = 0.0;
                }
            }
        }
    }
    return x;
}

std::unique_ptr<Regressor> EnsembleLearner::fit(const MatrixXd& z, const VectorXd& y,
                                                const VectorXd& w, Stream& rng) const {
    check_inputs(z, y, w);
    if (members.empty()) throw InvalidArgument("learners", "ensemble has no members");
    const Active act = positive_rows(z, y, w);
    const Eigen::Index m = act.y.size();
    const auto nm = static_cast<Eigen::Index>(members.size());
    const std::uint64_t base = rng.bits();

    VectorXd weights = VectorXd::Constant(nm, 1.0 / static_cast<double>(nm));
    const int k = static_cast<int>(std::min<Eigen::Index>(cv_folds, m));
    if (k >= 2 && nm > 1) {
        const auto fold = draw_folds(m, k, rng);
        MatrixXd pred(m, nm);
        for (int f = 0; f < k; ++f) {
            VectorXd wtr = act.w;
            std::vector<Eigen::Index> held;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (fold[i] == f) {
                    wtr(i) = 0.0;
                    held.push_back(i);
                }
            }
            MatrixXd zh(static_cast<Eigen::Index>(held.size()), act.z.cols());
            for (std::size_t r = 0; r < held.size(); ++r) zh.row(r) = act.z.row(held[r]);
            for (Eigen::Index j = 0; j < nm; ++j) {
                Stream s(base, "ensemble-cv", static_cast<std::uint64_t>(f * nm + j));
                const auto model = members[j]->fit(act.z, act.y, wtr, s);
                const VectorXd ph = model->predict(zh);
                for (std::size_t r = 0; r < held.size(); ++r) pred(held[r], j) = ph(r);
            }
        }
        const VectorXd root = act.w.cwiseSqrt();
        const VectorXd a = nnls(root.asDiagonal() * pred, root.cwiseProduct(act.y));
        if (a.sum() > 0.0) weights = a / a.sum();
    }
    std::vector<std::unique_ptr<Regressor>> fitted;
    for (Eigen::Index j = 0; j < nm; ++j) {
        Stream s(base, "ensemble-full", static_cast<std::uint64_t>(j));
        fitted.push_back(members[j]->fit(act.z, act.y, act.w, s));
    }
    return std::make_unique<EnsembleModel>(std::move(fitted), weights);
}

double hermite_he(int k, double t) {
    if (k == 0) return 1.0;
    double prev = 1.0;
    double cur = t;
    for (int j = 1; j < k; ++j) {
        const double next = t * cur - j * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

std::vector<std::vector<int>> hermite_multi_indices(int d, int n_terms) {
    std::vector<std::vector<int>> out;
    if (d <= 0) return out;
    for (int deg = 1; static_cast<int>(out.size()) < n_terms; ++deg) {
        // nondecreasing coordinate sequences of length deg
        std::vector<int> seq(static_cast<std::size_t>(deg), 0);
        while (true) {
            std::vector<int> a(static_cast<std::size_t>(d), 0);
            for (int c : seq) ++a[c];
            out.push_back(std::move(a));
            if (static_cast<int>(out.size()) == n_terms) return out;
            int pos = deg - 1;
            while (pos >= 0 && seq[pos] == d - 1) --pos;
            if (pos < 0) break;
            ++seq[pos];
            for (int q = pos + 1; q < deg; ++q) seq[q] = seq[pos];
        }
    }
    return out;
}

MatrixXd hermite_basis(const MatrixXd& z, int n_terms) {
    const auto idx = hermite_multi_indices(static_cast<int>(z.cols()), n_terms);
    MatrixXd out(z.rows(), static_cast<Eigen::Index>(idx.size()));
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (std::size_t t = 0; t < idx.size(); ++t) {
            double v = 1.0;
            for (std::size_t j = 0; j < idx[t].size(); ++j) {
                if (idx[t][j] > 0) v *= hermite_he(idx[t][j], z(i, static_cast<Eigen::Index>(j)));
            }
            out(i, static_cast<Eigen::Index>(t)) = v;
        }
    }
    return out;
}

MatrixXd polynomial_basis(const MatrixXd& z, int degree, bool interactions) {
    const Eigen::Index d = z.cols();
    const Eigen::Index cols = d * std::max(degree, 1) + (interactions ? d * (d - 1) / 2 : 0);
    MatrixXd out(z.rows(), cols);
    Eigen::Index c = 0;
    for (int k = 1; k <= std::max(degree, 1); ++k) {
        for (Eigen::Index j = 0; j < d; ++j) out.col(c++) = z.col(j).array().pow(k).matrix();
    }
    if (interactions) {
        for (Eigen::Index j = 0; j < d; ++j) {
            for (Eigen::Index l = j + 1; l < d; ++l) out.col(c++) = z.col(j).cwiseProduct(z.col(l));
        }
    }
    return out;
}

std::shared_ptr<const Learner> make_learner(const std::string& name) {
    if (name == "linear") return std::make_shared<LinearLearner>();
    if (name == "ridge") return std::make_shared<RidgeLearner>();
    if (name == "lasso") return std::make_shared<LassoLearner>();
    if (name == "knn") return std::make_shared<KnnLearner>();
    if (name == "ensemble") {
        auto e = std::make_shared<EnsembleLearner>();
        e->members = {make_learner("linear"), make_learner("ridge"), make_learner("lasso"),
                      make_learner("knn")};
        return e;
    }
    throw InvalidArgument("learners", "unknown learner '" + name + "'");
}

}  // namespace rdflex
