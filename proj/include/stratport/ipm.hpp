#pragma once

// Primal-dual interior-point method (Mehrotra predictor-corrector) for
//
//   minimize    c^T x
//   subject to  A x = b,  G x <= h,  x^T Q x + a^T x <= r   (optional)
//
// with Q symmetric PSD. Sizes are small (tens of variables): G is sparse with
// short rows, the Newton system is dense.

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace stratport::ipm {

struct Problem {
    Eigen::VectorXd c;
    Eigen::MatrixXd A;  // may have zero rows
    Eigen::VectorXd b;
    Eigen::SparseMatrix<double, Eigen::RowMajor> G;
    Eigen::VectorXd h;
    bool has_quadratic = false;
    Eigen::MatrixXd Q;
    Eigen::VectorXd a;
    double r = 0.0;
};

struct Options {
    int max_iterations = 100;
    double tol_feas = 1e-9;
    double tol_gap = 1e-10;
};

struct Result {
    Eigen::VectorXd x;
    Eigen::VectorXd lambda;  // linear inequality multipliers
    double lambda_q = 0.0;   // quadratic constraint multiplier
    Eigen::VectorXd nu;      // equality multipliers
    bool converged = false;
    int iterations = 0;
    /// max of scaled dual, primal, inequality residuals and mean complementarity
    double kkt_residual = 0.0;
};

/// `x0` only needs the right size; it does not have to be feasible.
Result solve(const Problem& p, const Eigen::VectorXd& x0, const Options& options = {});

}  // namespace stratport::ipm
