#pragma once

#include <optional>
#include <string>

namespace rdflex {

enum class CiMethod { undersmoothing, rbc, bias_aware };

std::string to_string(CiMethod m);
CiMethod parse_ci_method(const std::string& s);

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.95;
    CiMethod method = CiMethod::bias_aware;
    double half_length = 0.0;
    std::optional<double> bias_bound;
};

/// One estimation run of a (possibly covariate-adjusted) RD jump estimator.
struct RdFit {
    double tau_hat = 0.0;
    double se = 0.0;
    double h = 0.0;
    int p = 1;
    int v = 0;
    int n_eff_left = 0;
    int n_eff_right = 0;
    std::optional<ConfidenceInterval> ci;
};

}  // namespace rdflex
