#include "stratport/policy.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "stratport/error.hpp"
#include "stratport/ipm.hpp"

namespace stratport::policy {

void PolicyParams::validate(std::size_t n) const {
    const auto sz = static_cast<Eigen::Index>(n);
    if (kappa.size() != sz || w_min.size() != sz || w_max.size() != sz) {
        throw InputError("policy parameters do not match the number of assets");
    }
    if (!(gamma_sc >= 0.0) || !(gamma_tc >= 0.0) || !std::isfinite(gamma_sc) || !std::isfinite(gamma_tc)) {
        throw InputError("aversion parameters must be finite and >= 0");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("risk limit must be > 0");
    if (!(leverage >= 1.0)) throw InputError("leverage limit must be >= 1");
    if ((kappa.array() < 0.0).any() || !kappa.allFinite()) throw InputError("shorting costs must be >= 0");
    for (Eigen::Index i = 0; i < sz; ++i) {
        if (std::isnan(w_min(i)) || std::isnan(w_max(i)) || w_min(i) > 0.0 || w_max(i) < 0.0) {
            throw InputError("position bounds must satisfy w_min <= 0 <= w_max");
        }
    }
}

PolicyParams default_params(std::size_t n) {
    const auto sz = static_cast<Eigen::Index>(n);
    PolicyParams p;
    p.kappa = Eigen::VectorXd::Constant(sz, 0.0005);
    p.w_min = Eigen::VectorXd::Constant(sz, -0.25);
    p.w_max = Eigen::VectorXd::Constant(sz, 0.4);
    return p;
}

void PolicyInput::validate() const {
    const auto n = mu.size();
    if (n == 0) throw InputError("policy input has no assets");
    if (sigma.rows() != n || sigma.cols() != n || w_prev.size() != n || tau.size() != n) {
        throw InputError("policy input dimensions disagree");
    }
    if (!mu.allFinite() || !sigma.allFinite() || !w_prev.allFinite() || !tau.allFinite()) {
        throw InputError("policy input has non-finite entries");
    }
    const double scale = std::max(1e-300, sigma.cwiseAbs().maxCoeff());
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw InputError("covariance is not symmetric");
    }
    if ((tau.array() < 0.0).any()) throw InputError("transaction cost rates must be >= 0");
    if (benchmark) {
        const auto b = static_cast<Eigen::Index>(*benchmark);
        if (b >= n) throw InputError("benchmark position out of range");
        if (mu(b) != 0.0 || sigma.row(b).cwiseAbs().maxCoeff() != 0.0 || sigma.col(b).cwiseAbs().maxCoeff() != 0.0) {
            throw InputError("benchmark mean and covariance entries must be exactly zero");
        }
    }
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> augment_with_benchmark(const Eigen::VectorXd& mu,
                                                                   const Eigen::MatrixXd& sigma,
                                                                   std::size_t position) {
    const auto n = mu.size();
    const auto pos = static_cast<Eigen::Index>(position);
    if (sigma.rows() != n || sigma.cols() != n) throw InputError("mean and covariance sizes disagree");
    if (pos > n) throw InputError("benchmark position out of range");
    Eigen::VectorXd m = Eigen::VectorXd::Zero(n + 1);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n + 1, n + 1);
    auto map = [&](Eigen::Index i) { return i < pos ? i : i + 1; };
    for (Eigen::Index i = 0; i < n; ++i) {
        m(map(i)) = mu(i);
        for (Eigen::Index j = 0; j < n; ++j) s(map(i), map(j)) = sigma(i, j);
    }
    return {m, s};
}

double policy_objective(const Eigen::VectorXd& w, const PolicyInput& input, const PolicyParams& params) {
    const Eigen::VectorXd shorts = (-w).cwiseMax(0.0);
    return input.mu.dot(w) - params.gamma_sc * params.kappa.dot(shorts) -
           params.gamma_tc * input.tau.dot((w - input.w_prev).cwiseAbs());
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Linear rows shared by the allocation problem and the minimum-risk problem:
// box on w, s >= 0, s >= -w, 1^T s <= (L_max - 1)/2. Columns [0, n) hold w
// and [n, 2n) hold s.
void shared_rows(const PolicyParams& params, Eigen::Index n, Triplets& entries, std::vector<double>& rhs) {
    auto next = [&] { return static_cast<Eigen::Index>(rhs.size()); };
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::isfinite(params.w_max(i))) {
            entries.emplace_back(next(), i, 1.0);
            rhs.push_back(params.w_max(i));
        }
        if (std::isfinite(params.w_min(i))) {
            entries.emplace_back(next(), i, -1.0);
            rhs.push_back(-params.w_min(i));
        }
        entries.emplace_back(next(), n + i, -1.0);
        rhs.push_back(0.0);
        entries.emplace_back(next(), i, -1.0);
        entries.emplace_back(next(), n + i, -1.0);
        rhs.push_back(0.0);
    }
    // With 1^T w = 1, ||w||_1 = 1 + 2 * 1^T (w)_-.
    for (Eigen::Index i = 0; i < n; ++i) entries.emplace_back(next(), n + i, 1.0);
    rhs.push_back(0.5 * (params.leverage - 1.0));
}

void assemble(ipm::Problem& p, const Triplets& entries, const std::vector<double>& rhs, Eigen::Index cols,
              Eigen::Index n) {
    p.G.resize(static_cast<Eigen::Index>(rhs.size()), cols);
    p.G.setFromTriplets(entries.begin(), entries.end());
    p.h = Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    p.A = Eigen::MatrixXd::Zero(1, cols);
    p.A.block(0, 0, 1, n).setOnes();
    p.b = Eigen::VectorXd::Ones(1);
}

void check_budget_reachable(const PolicyParams& params) {
    if (params.w_max.sum() < 1.0) {
        throw InfeasibleError("upper position bounds sum to less than 1; the budget cannot be met");
    }
}

}  // namespace

double minimum_risk_ratio(const PolicyInput& input, const PolicyParams& params, const SolverOptions& options) {
    input.validate();
    params.validate(static_cast<std::size_t>(input.mu.size()));
    check_budget_reachable(params);
    const Eigen::Index n = input.mu.size();
    const Eigen::Index cols = 2 * n + 1;  // w, s, t
    Triplets entries;
    std::vector<double> rhs;
    shared_rows(params, n, entries, rhs);
    ipm::Problem p;
    assemble(p, entries, rhs, cols, n);
    p.c = Eigen::VectorXd::Zero(cols);
    p.c(2 * n) = 1.0;
    p.has_quadratic = true;
    p.Q = Eigen::MatrixXd::Zero(cols, cols);
    // normalized so that t is O(1) whatever the risk scale
    const Eigen::MatrixXd ratio_q = input.sigma / (params.sigma * params.sigma);
    const double q_scale = std::max(ratio_q.cwiseAbs().maxCoeff(), 1e-300);
    p.Q.topLeftCorner(n, n) = ratio_q / q_scale;
    p.a = Eigen::VectorXd::Zero(cols);
    p.a(2 * n) = -1.0;
    p.r = 0.0;
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(cols);
    x0.head(n).setConstant(1.0 / static_cast<double>(n));
    ipm::Options o;
    o.max_iterations = options.max_iterations;
    o.tol_feas = options.tolerance;
    o.tol_gap = options.tolerance * 0.1;
    const auto res = ipm::solve(p, x0, o);
    if (!res.converged) throw SolverError("minimum-risk problem did not converge");
    const Eigen::VectorXd w = res.x.head(n);
    return w.dot(ratio_q * w);
}

PolicySolution solve_policy(const PolicyInput& input, const PolicyParams& params, const SolverOptions& options) {
    input.validate();
    const Eigen::Index n = input.mu.size();
    params.validate(static_cast<std::size_t>(n));
    check_budget_reachable(params);

    // trade variables only where trading costs something
    std::vector<Eigen::Index> traded;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (params.gamma_tc * input.tau(i) > 0.0) traded.push_back(i);
    }
    const auto n_u = static_cast<Eigen::Index>(traded.size());
    const Eigen::Index cols = 2 * n + n_u;

    Triplets entries;
    std::vector<double> rhs;
    shared_rows(params, n, entries, rhs);
    for (Eigen::Index j = 0; j < n_u; ++j) {
        const Eigen::Index i = traded[static_cast<std::size_t>(j)];
        const auto up = static_cast<Eigen::Index>(rhs.size());
        entries.emplace_back(up, i, 1.0);
        entries.emplace_back(up, 2 * n + j, -1.0);
        rhs.push_back(input.w_prev(i));
        entries.emplace_back(up + 1, i, -1.0);
        entries.emplace_back(up + 1, 2 * n + j, -1.0);
        rhs.push_back(-input.w_prev(i));
    }

    ipm::Problem p;
    assemble(p, entries, rhs, cols, n);
    p.c = Eigen::VectorXd::Zero(cols);
    p.c.head(n) = -input.mu;
    p.c.segment(n, n) = params.gamma_sc * params.kappa;
    for (Eigen::Index j = 0; j < n_u; ++j) {
        p.c(2 * n + j) = params.gamma_tc * input.tau(traded[static_cast<std::size_t>(j)]);
    }
    const double c_max = p.c.cwiseAbs().maxCoeff();
    if (c_max > 0.0) p.c /= c_max;
    p.has_quadratic = true;
    p.Q = Eigen::MatrixXd::Zero(cols, cols);
    p.Q.topLeftCorner(n, n) = input.sigma / (params.sigma * params.sigma);
    p.a = Eigen::VectorXd::Zero(cols);
    p.r = 1.0;

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(cols);
    x0.head(n).setConstant(1.0 / static_cast<double>(n));
    ipm::Options o;
    o.max_iterations = options.max_iterations;
    o.tol_feas = options.tolerance;
    o.tol_gap = options.tolerance * 0.1;
    const auto res = ipm::solve(p, x0, o);
    if (!res.converged) {
        const double ratio = minimum_risk_ratio(input, params, options);
        if (ratio > 1.0 + 1e-6) {
            throw InfeasibleError("risk limit cannot be met: the least risky feasible portfolio has variance " +
                                  std::to_string(ratio) + " times the limit");
        }
        throw SolverError("interior-point method did not converge (KKT residual " +
                          std::to_string(res.kkt_residual) + ")");
    }

    PolicySolution sol;
    sol.w = res.x.head(n);
    sol.objective = policy_objective(sol.w, input, params);
    sol.budget_residual = std::abs(sol.w.sum() - 1.0);
    const double s2 = params.sigma * params.sigma;
    sol.risk_residual = std::max(0.0, sol.w.dot(input.sigma * sol.w) - s2) / s2;
    sol.leverage_residual = std::max(0.0, sol.w.lpNorm<1>() - params.leverage) / params.leverage;
    double bound = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        bound = std::max({bound, sol.w(i) - params.w_max(i), params.w_min(i) - sol.w(i)});
    }
    sol.bound_residual = bound;
    sol.kkt_residual = res.kkt_residual;
    sol.iterations = res.iterations;
    sol.status = "optimal";
    return sol;
}

}  // namespace stratport::policy
