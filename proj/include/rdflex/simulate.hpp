#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rdflex/crossfit.hpp"
#include "rdflex/locpoly.hpp"
#include "rdflex/pipeline.hpp"

namespace rdflex {

/// How the covariate index G(z) = sum_l (b_l(z) - E b_l) + 0.25 sum_j z_j
/// enters the outcome of the Hermite design. With phi_X(x) = sign(x)(x^2 + x/2):
///   scaled:   Y = 1{x>=0} + phi_X + (1 + phi_X) G + e
///   literal:  Y = 1{x>=0} + phi_X + (phi_X + 1{x>=0}) G + e
///   additive: Y = 1{x>=0} + phi_X + G + e
/// (G is absent when L = 0.)
enum class HermiteShape { scaled, literal, additive };

HermiteShape parse_hermite_shape(const std::string& s);
std::string to_string(HermiteShape s);

struct DgpSpec {
    enum class Kind { crossfit_demo, hermite };
    Kind kind = Kind::hermite;
    int d = 0;  // crossfit_demo covariates
    int L = 0;  // hermite terms, 0, 4 or 16
    HermiteShape shape = HermiteShape::scaled;
    bool center = true;      // subtract E b_l under the covariate law
    double noise_sd = 0.5;   // hermite noise; variance 0.25
};

/// Y = sin(X) + N(0,1), X ~ U(-pi, pi), Z ~ N(0, I_d) independent; tau = 0.
Dataset gen_crossfit_demo(Index n, int d, std::uint64_t seed);

/// Four U(-1,1) covariates, X ~ U(-1,1), tau = 1.
Dataset gen_hermite(Index n, const DgpSpec& spec, std::uint64_t seed);
Dataset gen_hermite(Index n, int L, std::uint64_t seed);

Dataset generate(const DgpSpec& spec, Index n, std::uint64_t seed);

/// G(z) of the Hermite design for each row of z.
Eigen::VectorXd hermite_index(const Eigen::MatrixXd& z, const DgpSpec& spec);

/// E b_l for b_l = prod_j He_{a_j}(Z_j), Z_j ~ U(-1,1).
double hermite_term_mean(const std::vector<int>& a);

/// Closed-form optimal adjustment (mu0+ + mu0-)/2 of the design.
EtaFn oracle_eta(const DgpSpec& spec);

/// oracle_eta without its covariate-free constant 1/2. The constant cancels
/// in every jump estimate; dropping it keeps the L = 0 oracle bit-identical
/// to the unadjusted estimator. This is what run_study uses.
EtaFn oracle_adjustment(const DgpSpec& spec);

/// Population limit of a localized first stage fit with a uniform window of
/// half-width b, for learners whose function class contains G (any linear
/// learner when the index is linear in z). Unlike the optimal adjustment this
/// depends on b because phi_X varies across the window.
EtaFn localized_limit(const DgpSpec& spec, double b);

OracleAdjustments oracle_adjustments(const DgpSpec& spec);

double true_tau(const DgpSpec& spec);

/// Second-derivative bound of E[Y|X] away from the cutoff.
double population_smoothness(const DgpSpec& spec);

struct HAmse {
    double V;  // n h var(tau_hat) in the limit
    double B;  // leading bias / h^2
    double h;  // (V / (4 B^2))^{1/5} n^{-1/5}
};

/// h_AMSE of the unadjusted local linear estimator for the L = 0 Hermite
/// design under the given kernel.
HAmse hermite_h_amse(const Kernel& k, const DgpSpec& spec, Index n);

struct EstimatorSpec {
    std::string label;
    EstimatorConfig config;
};

struct SimStudySpec {
    DgpSpec dgp;
    Index n = 2000;
    int reps = 1000;
    std::uint64_t seed = 1;
    std::vector<EstimatorSpec> estimators;
    int threads = 0;  // 0: hardware concurrency
    double max_failure_rate = 1e-3;
};

struct CellResult {
    std::string label;
    int ok = 0;
    int failures = 0;
    double bias = 0.0, sd = 0.0, rmse = 0.0, coverage = 0.0;
    double avg_ci_length = 0.0, avg_h = 0.0, avg_se = 0.0;
    double mc_se_bias = 0.0, mc_se_sd = 0.0, mc_se_coverage = 0.0;
    double mc_se_length = 0.0, mc_se_h = 0.0;
    // replication-level streams; NaN marks a failed replication
    std::vector<double> estimate, se, ci_lo, ci_hi, h;
};

struct SimStudyResult {
    SimStudySpec spec;
    double tau = 0.0;
    std::vector<CellResult> cells;

    const CellResult& cell(const std::string& label) const;
};

/// Replication r draws its data from stream (seed, "data", r) and runs every
/// estimator on it; results do not depend on the number of threads.
SimStudyResult run_study(const SimStudySpec& spec);

/// Aggregates per-replication estimates for one cell (population SD so that
/// rmse^2 = bias^2 + sd^2).
void summarize(CellResult& cell, double tau);

struct EcdfRow {
    double value;
    double f_a;
    double f_b;
};

struct Ecdf {
    std::vector<EcdfRow> rows;
    double ks = 0.0;
};

Ecdf emit_ecdf(const SimStudyResult& result, const std::string& a, const std::string& b);

double ks_distance(std::vector<double> a, std::vector<double> b);

/// Aligned plain-text table, entries x100 as in published RD tables.
std::string format_table(const SimStudyResult& result);

/// One row per estimator with full-precision summaries and Monte Carlo SEs.
std::string format_csv(const SimStudyResult& result);

}  // namespace rdflex
