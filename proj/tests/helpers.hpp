#pragma once

#include <cstdint>
#include <memory>

#include <Eigen/Dense>

#include "rdflex/locpoly.hpp"
#include "rdflex/rng.hpp"

namespace testutil {

inline Eigen::VectorXd uniform_vec(rdflex::Stream& rng, rdflex::Index n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (rdflex::Index i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
    return v;
}

inline Eigen::VectorXd normal_vec(rdflex::Stream& rng, rdflex::Index n, double sd = 1.0) {
    Eigen::VectorXd v(n);
    for (rdflex::Index i = 0; i < n; ++i) v(i) = sd * rng.normal();
    return v;
}

// y = jump 1{x>=0} + x + noise, with d standard normal covariates entering linearly
inline rdflex::Dataset toy_data(rdflex::Index n, int d, std::uint64_t seed, double noise = 0.5) {
    rdflex::Stream rng(seed, "toy");
    rdflex::Dataset data;
    data.x = uniform_vec(rng, n, -1.0, 1.0);
    data.z.resize(n, d);
    for (rdflex::Index i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) data.z(i, j) = rng.normal();
    }
    data.y.resize(n);
    for (rdflex::Index i = 0; i < n; ++i) {
        double s = (data.x(i) >= 0.0 ? 1.0 : 0.0) + data.x(i) + noise * rng.normal();
        for (int j = 0; j < d; ++j) s += 0.5 * data.z(i, j) / (j + 1);
        data.y(i) = s;
    }
    return data;
}

inline std::shared_ptr<const rdflex::Dataset> share(rdflex::Dataset d) {
    return std::make_shared<const rdflex::Dataset>(std::move(d));
}

}  // namespace testutil
