#pragma once

// Single-period allocation:
//
//   maximize    mu^T w - gamma_sc kappa^T (w)_- - gamma_tc tau^T |w - w_prev|
//   subject to  w^T Sigma w <= sigma^2,  1^T w = 1,  ||w||_1 <= L_max,
//               w_min <= w <= w_max
//
// Returns and risks are active (relative to a benchmark whose entry is zero).

#include <cstddef>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace stratport::policy {

struct PolicyParams {
    double gamma_sc = 0.0;
    double gamma_tc = 0.0;
    Eigen::VectorXd kappa;  // shorting cost rate per asset, fraction/day
    double sigma = 0.0045;  // daily risk limit
    double leverage = 2.0;  // L_max
    Eigen::VectorXd w_min;
    Eigen::VectorXd w_max;

    void validate(std::size_t n) const;
};

/// kappa = 0.0005, sigma = 0.0045, L_max = 2, bounds [-0.25, 0.4]; the two
/// aversion parameters are left at 0 for tuning.
PolicyParams default_params(std::size_t n);

struct PolicyInput {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    Eigen::VectorXd w_prev;
    Eigen::VectorXd tau;
    std::optional<std::size_t> benchmark;  // when set, its mean/covariance entries must be zero

    void validate() const;
};

/// Feasibility a returned solution is held to (the residuals below).
namespace tolerance {
inline constexpr double budget = 1e-8;
inline constexpr double risk = 1e-6;  // relative to sigma^2
inline constexpr double leverage = 1e-8;
inline constexpr double bounds = 1e-8;
}  // namespace tolerance

struct PolicySolution {
    Eigen::VectorXd w;
    double objective = 0.0;         // unscaled objective at w
    double budget_residual = 0.0;   // |1^T w - 1|
    double risk_residual = 0.0;     // max(0, w^T Sigma w - sigma^2) / sigma^2
    double leverage_residual = 0.0; // max(0, ||w||_1 - L_max) / L_max
    double bound_residual = 0.0;    // largest box violation
    double kkt_residual = 0.0;      // on the scaled problem
    int iterations = 0;
    std::string status;
};

struct SolverOptions {
    int max_iterations = 100;
    double tolerance = 1e-9;
};

/// Inserts a zero mean entry and a zero covariance row/column at `position`.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> augment_with_benchmark(const Eigen::VectorXd& mu,
                                                                   const Eigen::MatrixXd& sigma,
                                                                   std::size_t position);

/// Objective value of the (maximization) problem at `w`.
double policy_objective(const Eigen::VectorXd& w, const PolicyInput& input, const PolicyParams& params);

/// Throws InfeasibleError when no w satisfies the constraints and SolverError
/// when the interior-point method fails on a feasible problem.
PolicySolution solve_policy(const PolicyInput& input, const PolicyParams& params, const SolverOptions& options = {});

/// Smallest achievable w^T Sigma w / sigma^2 under the linear constraints.
double minimum_risk_ratio(const PolicyInput& input, const PolicyParams& params, const SolverOptions& options = {});

}  // namespace stratport::policy
