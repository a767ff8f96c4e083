#include "rdflex/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "rdflex/error.hpp"

namespace rdflex {

namespace {

using Eigen::VectorXd;

bool is_learner(const std::string& id) {
    static const std::set<std::string> ids{"linear", "ridge", "lasso", "knn", "ensemble"};
    return ids.count(id) > 0;
}

bool is_cross_fitted(const std::string& id) { return is_learner(id) || id == "linear-cf"; }

int joint_order(const EstimatorConfig& cfg) { return cfg.ci == CiMethod::rbc ? 2 : cfg.p; }

void attach_ci(RdFit& fit, const EstimatorConfig& cfg, const VectorXd& x) {
    ConfidenceInterval ci;
    ci.level = 1.0 - cfg.alpha;
    ci.method = cfg.ci;
    double half = z_crit(cfg.alpha, 0.0) * fit.se;
    if (cfg.ci == CiMethod::bias_aware) {
        const auto w = local_poly_weights(x, cfg.kernel, fit.h, 1, 0, Side::jump);
        const double b = std::abs(bias_bound(w, x, cfg.smoothness));
        half = fit.se > 0.0 ? z_crit(cfg.alpha, b / fit.se) * fit.se : b;
        ci.bias_bound = b;
    }
    ci.lo = fit.tau_hat - half;
    ci.hi = fit.tau_hat + half;
    ci.half_length = half;
    fit.ci = ci;
}

VectorXd linear_index(const Dataset& data, const VectorXd& gamma) { return data.z * gamma; }

struct SplitOutput {
    RdFit fit;
    BandwidthSelection bandwidth;
    VectorXd eta;
    std::vector<Index> train_sizes;
};

// eta for the cross-fitted joint linear adjustment at bandwidth h
VectorXd joint_cf_eta(std::shared_ptr<const Dataset> data, const EstimatorConfig& cfg,
                      const FoldAssignment& folds, double h, std::uint64_t seed) {
    JointLinearAdjuster adj(cfg.kernel, h, joint_order(cfg));
    const auto models = fit_adjusters(*data, folds, adj, {}, Column::y, seed);
    return adjust(data, folds, models, Column::y).eta;
}

SplitOutput run_split(std::shared_ptr<const Dataset> data, const EstimatorConfig& cfg,
                      const FoldAssignment& folds, std::uint64_t seed, double h0, double b,
                      const NearestNeighbors& nn, const OracleAdjustments* oracle) {
    const VectorXd& y = data->y;
    const VectorXd& x = data->x;
    SplitOutput out;
    out.eta = VectorXd::Zero(data->n());

    if (cfg.adjuster == "oracle" || cfg.adjuster == "oracle-limit") {
        if (!oracle) throw ConfigError("pipeline", "oracle adjusters are only available in simulations");
        out.eta = cfg.adjuster == "oracle" ? oracle->optimal(data->z) : oracle->limit(b)(data->z);
    } else if (cfg.adjuster == "linear-nocf") {
        const int pj = joint_order(cfg);
        const VectorXd g1 = JointLinearAdjuster(cfg.kernel, h0, pj).gamma(*data, Column::y);
        const double h1 = select_bandwidth(x, y - linear_index(*data, g1), cfg, nn).h;
        const VectorXd g2 = JointLinearAdjuster(cfg.kernel, h1, pj).gamma(*data, Column::y);
        out.eta = linear_index(*data, g2);
        out.train_sizes = {data->n()};
    } else if (cfg.adjuster == "linear-cf") {
        const VectorXd e1 = joint_cf_eta(data, cfg, folds, h0, seed);
        const double h1 = select_bandwidth(x, y - e1, cfg, nn).h;
        out.eta = joint_cf_eta(data, cfg, folds, h1, Stream(seed, "second-pass").bits());
    } else if (is_learner(cfg.adjuster)) {
        const LocalizedAdjuster adj(learner_for(cfg));
        LocalizationWindow window;
        window.b = b;
        const auto models = fit_adjusters(*data, folds, adj, window, Column::y, seed);
        out.eta = adjust(data, folds, models, Column::y).eta;
    }
    if (is_cross_fitted(cfg.adjuster)) {
        for (int s = 0; s < folds.S; ++s) out.train_sizes.push_back(data->n() - folds.sizes()[s]);
    }

    const VectorXd m = y - out.eta;
    out.bandwidth = select_bandwidth(x, m, cfg, nn);
    if (cfg.dml1 && is_cross_fitted(cfg.adjuster)) {
        AdjustedDataset adj;
        adj.base = data;
        adj.eta = out.eta;
        adj.m = m;
        adj.folds = folds;
        adj.adjuster_id = cfg.adjuster;
        const int pe = cfg.ci == CiMethod::rbc ? 2 : (cfg.ci == CiMethod::bias_aware ? 1 : cfg.p);
        out.fit = estimate_dml1(adj, cfg.kernel, out.bandwidth.h, pe, nn);
        attach_ci(out.fit, cfg, x);
    } else {
        out.fit = fit_with_ci(x, m, cfg, out.bandwidth.h, nn);
    }
    return out;
}

}  // namespace

BandwidthChoice parse_bandwidth(const std::string& s) {
    BandwidthChoice b;
    if (s == "auto-mse") {
        b.policy = BandwidthPolicy::auto_mse;
    } else if (s == "auto-ba") {
        b.policy = BandwidthPolicy::auto_ba;
    } else if (s == "undersmooth") {
        b.policy = BandwidthPolicy::undersmooth;
    } else if (s.rfind("fixed=", 0) == 0) {
        b.policy = BandwidthPolicy::fixed;
        try {
            std::size_t used = 0;
            b.fixed_h = std::stod(s.substr(6), &used);
            if (used != s.size() - 6) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw InvalidArgument("pipeline", "cannot parse bandwidth '" + s + "'");
        }
        if (!(b.fixed_h > 0.0)) throw InvalidArgument("pipeline", "fixed bandwidth must be positive");
    } else {
        throw InvalidArgument("pipeline", "unknown bandwidth policy '" + s + "'");
    }
    return b;
}

std::string to_string(const BandwidthChoice& b) {
    switch (b.policy) {
    case BandwidthPolicy::auto_mse: return "auto-mse";
    case BandwidthPolicy::auto_ba: return "auto-ba";
    case BandwidthPolicy::undersmooth: return "undersmooth";
    case BandwidthPolicy::fixed: {
        char buf[64];
        std::snprintf(buf, sizeof buf, "fixed=%.17g", b.fixed_h);
        return buf;
    }
    }
    return "?";
}

void validate(const EstimatorConfig& cfg) {
    static const std::set<std::string> ids{"zero", "linear", "ridge", "lasso", "knn",
                                           "ensemble", "oracle", "oracle-limit", "linear-nocf",
                                           "linear-cf"};
    if (!ids.count(cfg.adjuster)) {
        throw InvalidArgument("pipeline", "unknown adjuster '" + cfg.adjuster + "'");
    }
    if (cfg.p < 1 || cfg.p > 4) throw InvalidArgument("pipeline", "p must be between 1 and 4");
    if (cfg.folds < 1) throw InvalidArgument("pipeline", "folds must be >= 1");
    if (cfg.splits < 1) throw InvalidArgument("pipeline", "splits must be >= 1");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InvalidArgument("pipeline", "alpha must lie in (0, 1)");
    if (cfg.smoothness < 0.0) throw InvalidArgument("pipeline", "smoothness must be nonnegative");
    if (cfg.window && !(*cfg.window > 0.0)) throw InvalidArgument("pipeline", "window must be positive");
    if (cfg.nn.R < 1) throw InvalidArgument("pipeline", "nn must be >= 1");
    learner_for(cfg);
}

std::shared_ptr<const Learner> learner_for(const EstimatorConfig& cfg) {
    if (!is_learner(cfg.adjuster)) return nullptr;
    if (cfg.adjuster != "lasso" || cfg.lasso_basis == "none") return make_learner(cfg.adjuster);
    auto lasso = std::make_shared<LassoLearner>();
    if (cfg.lasso_basis == "poly2") {
        lasso->basis = [](const Eigen::MatrixXd& z) { return polynomial_basis(z, 2, true); };
    } else if (cfg.lasso_basis.rfind("hermite:", 0) == 0) {
        int terms = 0;
        try {
            terms = std::stoi(cfg.lasso_basis.substr(8));
        } catch (const std::exception&) {
            terms = 0;
        }
        if (terms < 1) throw InvalidArgument("pipeline", "bad lasso basis '" + cfg.lasso_basis + "'");
        lasso->basis = [terms](const Eigen::MatrixXd& z) { return hermite_basis(z, terms); };
    } else {
        throw InvalidArgument("pipeline", "unknown lasso basis '" + cfg.lasso_basis + "'");
    }
    return lasso;
}

BandwidthSelection select_bandwidth(const VectorXd& x, const VectorXd& outcome,
                                    const EstimatorConfig& cfg, const NearestNeighbors& nn) {
    switch (cfg.bandwidth.policy) {
    case BandwidthPolicy::fixed: {
        BandwidthSelection s;
        s.h = cfg.bandwidth.fixed_h;
        s.method = BandwidthMethod::fixed;
        return s;
    }
    case BandwidthPolicy::auto_mse: return select_cct_mse(x, outcome, cfg.kernel, nn);
    case BandwidthPolicy::undersmooth:
        return select_undersmooth(select_cct_mse(x, outcome, cfg.kernel, nn), x.size());
    case BandwidthPolicy::auto_ba: {
        BiasAwareOptions opt;
        opt.smoothness = cfg.smoothness;
        opt.alpha = cfg.alpha;
        opt.criterion = cfg.ba_criterion;
        return select_bias_aware(x, outcome, cfg.kernel, opt, nn);
    }
    }
    throw InvalidArgument("pipeline", "unhandled bandwidth policy");
}

RdFit fit_with_ci(const VectorXd& x, const VectorXd& outcome, const EstimatorConfig& cfg,
                  double h, const NearestNeighbors& nn) {
    switch (cfg.ci) {
    case CiMethod::bias_aware:
        return ci_bias_aware(x, outcome, cfg.kernel, h, cfg.alpha, cfg.smoothness, nn);
    case CiMethod::rbc: return ci_rbc(x, outcome, cfg.kernel, h, cfg.alpha, nn);
    case CiMethod::undersmoothing: {
        RdFit f = local_fit(x, outcome, cfg.kernel, h, cfg.p, 0, nn);
        f.ci = ci_undersmoothing(f, cfg.alpha);
        return f;
    }
    }
    throw InvalidArgument("pipeline", "unhandled CI method");
}

SharpResult estimate_sharp(std::shared_ptr<const Dataset> data, const EstimatorConfig& cfg,
                           std::uint64_t seed, const OracleAdjustments* oracle) {
    validate(cfg);
    data->validate();
    const NearestNeighbors nn(data->x, cfg.nn);
    SharpResult res;

    const bool needs_baseline = cfg.adjuster != "zero" && cfg.adjuster != "oracle";
    if (needs_baseline) res.baseline_h = select_bandwidth(data->x, data->y, cfg, nn).h;
    res.window_b = cfg.window ? *cfg.window : 2.0 * res.baseline_h;

    const int splits = is_cross_fitted(cfg.adjuster) ? cfg.splits : 1;
    const int S = is_cross_fitted(cfg.adjuster) ? cfg.folds : 1;
    SplitOutput last;
    const RdFit agg = repeated_splits(
        data->n(), S, splits, seed, [&](const FoldAssignment& folds, int s) {
            const std::uint64_t fs = Stream(seed, "first-stage", static_cast<std::uint64_t>(s)).bits();
            last = run_split(data, cfg, folds, fs, res.baseline_h, res.window_b, nn, oracle);
            return SplitResult{last.fit.tau_hat, last.fit.se, last.fit.h};
        });

    if (splits == 1) {
        res.fit = last.fit;
    } else {
        res.fit = last.fit;
        res.fit.tau_hat = agg.tau_hat;
        res.fit.se = agg.se;
        res.fit.h = agg.h;
        attach_ci(res.fit, cfg, data->x);
    }
    res.bandwidth = last.bandwidth;
    res.train_sizes = last.train_sizes;
    res.eta = last.eta;
    res.adjustment_jump = local_fit(data->x, last.eta, cfg.kernel, last.fit.h, 1, 0, nn);
    return res;
}

FuzzyResult estimate_fuzzy_pipeline(std::shared_ptr<const Dataset> data,
                                    const EstimatorConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    data->validate();
    if (!data->t) throw MissingTreatment("pipeline", "fuzzy estimation needs a treatment column");
    if (cfg.adjuster == "oracle" || cfg.adjuster == "oracle-limit") {
        throw ConfigError("pipeline", "no oracle adjuster for fuzzy designs");
    }
    const NearestNeighbors nn(data->x, cfg.nn);
    FuzzyResult res;
    const double h0 = select_bandwidth(data->x, data->y, cfg, nn).h;
    res.window_b = cfg.window ? *cfg.window : 2.0 * h0;

    AdjusterPtr adj;
    if (cfg.adjuster == "zero") {
        adj = std::make_shared<ZeroAdjuster>();
    } else if (cfg.adjuster == "linear-nocf" || cfg.adjuster == "linear-cf") {
        adj = std::make_shared<JointLinearAdjuster>(cfg.kernel, h0, joint_order(cfg));
    } else {
        adj = std::make_shared<LocalizedAdjuster>(learner_for(cfg));
    }
    const bool cf = cfg.adjuster != "zero" && cfg.adjuster != "linear-nocf";
    const int S = cf ? cfg.folds : 1;
    const int splits = cf ? cfg.splits : 1;
    const int pe = cfg.ci == CiMethod::rbc ? 2 : cfg.p;
    LocalizationWindow window;
    window.b = res.window_b;
    FuzzyOptions fopt;
    fopt.alpha = cfg.alpha;

    std::vector<SplitResult> parts;
    for (int s = 0; s < splits; ++s) {
        Stream rng(seed, "split", static_cast<std::uint64_t>(s));
        const FoldAssignment folds = assign_folds(data->n(), S, rng.bits());
        const std::uint64_t fs = Stream(seed, "first-stage", static_cast<std::uint64_t>(s)).bits();
        VectorXd my = data->y, mt = *data->t;
        if (cfg.adjuster != "zero") {
            if (cf) {
                my = adjust(data, folds, fit_adjusters(*data, folds, *adj, window, Column::y, fs), Column::y).m;
                mt = adjust(data, folds, fit_adjusters(*data, folds, *adj, window, Column::t, fs), Column::t).m;
            } else {
                Stream r0(fs, "full");
                my = data->y - adj->fit(*data, Column::y, window, r0)->eta(data->z);
                mt = *data->t - adj->fit(*data, Column::t, window, r0)->eta(data->z);
            }
        }
        res.bandwidth = select_bandwidth(data->x, my, cfg, nn);
        res.fit = fuzzy_from_adjusted(data->x, my, mt, cfg.kernel, res.bandwidth.h, pe, nn, fopt);
        parts.push_back({res.fit.theta_hat, res.fit.se, res.fit.h});
    }
    if (splits > 1) {
        const RdFit agg = aggregate_splits(parts);
        res.fit.theta_hat = agg.tau_hat;
        res.fit.se = agg.se;
        res.fit.h = agg.h;
        const double half = z_crit(cfg.alpha, 0.0) * agg.se;
        res.fit.ci->lo = agg.tau_hat - half;
        res.fit.ci->hi = agg.tau_hat + half;
        res.fit.ci->half_length = half;
    }
    return res;
}

}  // namespace rdflex
