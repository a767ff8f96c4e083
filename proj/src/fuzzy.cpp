#include "rdflex/fuzzy.hpp"

#include <cmath>
#include <limits>

#include "rdflex/error.hpp"
#include "rdflex/log.hpp"

namespace rdflex {

FuzzyFit fuzzy_from_adjusted(const Eigen::VectorXd& x, const Eigen::VectorXd& m_y,
                             const Eigen::VectorXd& m_t, const Kernel& k, double h, int p,
                             const NearestNeighbors& nn, const FuzzyOptions& opt) {
    const auto w = local_poly_weights(x, k, h, p, 0, Side::jump);
    FuzzyFit f;
    f.h = h;
    f.tau_y = w.apply(m_y);
    f.tau_t = w.apply(m_t);
    if (!(std::abs(f.tau_t) >= opt.weak_floor)) {
        throw WeakFirstStage("fuzzy", "treatment jump " + std::to_string(f.tau_t) +
                                          " is below the identification floor");
    }
    f.theta_hat = f.tau_y / f.tau_t;
    f.se_t = standard_error(w, nn.sigma2(m_t));
    f.first_stage_strength = f.se_t > 0.0 ? std::abs(f.tau_t) / f.se_t
                                          : std::numeric_limits<double>::infinity();
    if (f.first_stage_strength < opt.strength_warning) {
        warn("fuzzy", "weak first stage: |tau_T|/se = " + std::to_string(f.first_stage_strength));
    }
    const Eigen::VectorXd u = (m_y - f.theta_hat * m_t) / f.tau_t;
    f.se = standard_error(w, nn.sigma2(u));

    const double half = z_crit(opt.alpha, 0.0) * f.se;
    ConfidenceInterval ci;
    ci.lo = f.theta_hat - half;
    ci.hi = f.theta_hat + half;
    ci.level = 1.0 - opt.alpha;
    ci.method = CiMethod::undersmoothing;
    ci.half_length = half;
    f.ci = ci;
    return f;
}

FuzzyFit estimate_fuzzy(std::shared_ptr<const Dataset> data, const Kernel& k, double h, int p,
                        const FoldAssignment& folds, const Adjuster& adj_y,
                        const Adjuster& adj_t, const LocalizationWindow& window,
                        std::uint64_t seed, const NearestNeighbors& nn,
                        const FuzzyOptions& opt) {
    if (!data->t) throw MissingTreatment("fuzzy", "fuzzy estimation needs a treatment column");
    const auto my = fit_adjusters(*data, folds, adj_y, window, Column::y, Stream(seed, "fuzzy-y").bits());
    const auto mt = fit_adjusters(*data, folds, adj_t, window, Column::t, Stream(seed, "fuzzy-t").bits());
    const auto ay = adjust(data, folds, my, Column::y, adj_y.id());
    const auto at = adjust(data, folds, mt, Column::t, adj_t.id());
    return fuzzy_from_adjusted(data->x, ay.m, at.m, k, h, p, nn, opt);
}

}  // namespace rdflex
