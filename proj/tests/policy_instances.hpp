#pragma once

// Random allocation problems shared by the policy unit tests and the
// acceptance binary.

#include <cmath>

#include "oracles.hpp"
#include "stratport/policy.hpp"

namespace instances {

using namespace stratport;
using namespace stratport::policy;

struct Instance {
    PolicyInput input;
    PolicyParams params;
    Eigen::VectorXd w0;  // strictly feasible point
};

// Asset 0 is the benchmark. The portfolio 0.7 e_0 + 0.3/(n-1) (others) is
// strictly feasible by construction.
inline Instance random_instance(Rng& rng, Eigen::Index n, bool costs = true) {
    Instance in;
    const double sigma = 0.0045;
    Eigen::MatrixXd f(n - 1, n - 1);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.normal();
    Eigen::MatrixXd cov = f * f.transpose() / static_cast<double>(n - 1) +
                          0.2 * Eigen::MatrixXd::Identity(n - 1, n - 1);
    cov *= std::pow(0.003 + 0.01 * rng.uniform(), 2);
    Eigen::VectorXd mu(n - 1);
    for (Eigen::Index i = 0; i < n - 1; ++i) mu(i) = 0.001 * rng.normal();
    auto [m, s] = augment_with_benchmark(mu, cov, 0);
    in.w0 = Eigen::VectorXd::Constant(n, 0.3 / static_cast<double>(n - 1));
    in.w0(0) = 0.7;
    const double r0 = in.w0.dot(s * in.w0);
    if (r0 > 0.25 * sigma * sigma) s *= 0.25 * sigma * sigma / r0;
    in.input.mu = m;
    in.input.sigma = s;
    in.input.benchmark = 0;
    in.input.w_prev = Eigen::VectorXd(n);
    for (Eigen::Index i = 0; i < n; ++i) in.input.w_prev(i) = rng.uniform(-0.1, 0.3);
    in.input.w_prev(0) += 1.0 - in.input.w_prev.sum();
    in.input.tau = Eigen::VectorXd(n);
    for (Eigen::Index i = 0; i < n; ++i) in.input.tau(i) = costs ? rng.uniform(0.0, 0.002) : 0.0;
    in.params = default_params(static_cast<std::size_t>(n));
    in.params.w_max = Eigen::VectorXd::Constant(n, 0.6);
    in.params.w_max(0) = 1.0;
    in.params.w_min = Eigen::VectorXd::Constant(n, -0.3);
    in.params.gamma_sc = costs ? rng.uniform(0.1, 10) : 0.0;
    in.params.gamma_tc = costs ? rng.uniform(0.1, 10) : 0.0;
    if (!costs) in.params.kappa.setZero();
    return in;
}

inline oracle::PolicyInstance to_oracle(const Instance& in) {
    oracle::PolicyInstance o;
    o.mu = in.input.mu;
    o.sigma = in.input.sigma;
    o.kappa = in.params.kappa;
    o.tau = in.input.tau;
    o.w_prev = in.input.w_prev;
    o.w_min = in.params.w_min;
    o.w_max = in.params.w_max;
    o.gamma_sc = in.params.gamma_sc;
    o.gamma_tc = in.params.gamma_tc;
    o.risk = in.params.sigma;
    o.leverage = in.params.leverage;
    return o;
}

}  // namespace instances
