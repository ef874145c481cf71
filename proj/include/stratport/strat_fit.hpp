#pragma once

// Laplacian-regularized stratified fitting:
//
//   minimize  sum_k ( loss_k(theta_k) + r(theta_k) ) + 1/2 sum_ij W_ij ||theta_i - theta_j||^2
//
// solved by consensus ADMM. The first two terms are separable over strata
// (one proximal step per stratum); the Laplacian term is separable over the
// parameter entries (one linear solve per entry with a shared factorization).

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "stratport/strata_graph.hpp"

namespace stratport::fit {

enum class LossKind { huber_mean, logdet_precision };
enum class EmptyStratumMode { drop, literal };
enum class LossWeighting { equal, by_count };

std::string to_string(LossKind kind);
std::string to_string(EmptyStratumMode mode);
std::string to_string(LossWeighting weighting);
LossKind parse_loss_kind(const std::string& s);
EmptyStratumMode parse_empty_mode(const std::string& s);
LossWeighting parse_weighting(const std::string& s);

/// Outcome vectors grouped by stratum; strata may be empty.
class StratumDataset {
public:
    StratumDataset() = default;
    StratumDataset(std::size_t strata, std::size_t dim);

    /// Groups the rows of `outcomes` by the 0-based stratum in `labels`.
    static StratumDataset from_records(std::size_t strata, std::span<const std::size_t> labels,
                                       const Eigen::MatrixXd& outcomes);

    std::size_t strata() const { return outcomes_.size(); }
    std::size_t dim() const { return dim_; }
    std::size_t count(std::size_t k) const { return static_cast<std::size_t>(outcomes_[k].rows()); }
    std::size_t total() const;
    /// n_k x dim matrix of the outcomes in stratum k.
    const Eigen::MatrixXd& outcomes(std::size_t k) const { return outcomes_[k]; }

    void add(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& y);

    /// Copy with every outcome multiplied by `factor`.
    StratumDataset scaled(double factor) const;
    /// Copy with the outcomes of `other` appended stratum by stratum.
    StratumDataset merged(const StratumDataset& other) const;

    /// All outcomes stacked in stratum order.
    Eigen::MatrixXd pooled() const;
    /// S_k = (1/n_k) sum y y^T, zero when the stratum is empty.
    Eigen::MatrixXd second_moment(std::size_t k) const;

private:
    std::size_t dim_ = 0;
    std::vector<Eigen::MatrixXd> outcomes_;
};

struct FitConfig {
    double local_weight = 0.0;                       // gamma_loc, ridge on theta_k
    std::vector<double> laplacian_weights{0, 0, 0};  // one per edge group
    double huber_m = 0.01;
    double rho = 1.0;                                // initial ADMM penalty
    bool adaptive_rho = true;                        // residual balancing
    int max_iterations = 20000;
    double tol_abs = 1e-6;
    double tol_rel = 1e-5;
    EmptyStratumMode empty_mode = EmptyStratumMode::drop;
    LossWeighting weighting = LossWeighting::equal;
    int threads = 1;

    void validate() const;
};

struct ResidualRecord {
    double primal = 0.0;
    double dual = 0.0;
};

struct FitResult {
    LossKind kind = LossKind::huber_mean;
    std::size_t dim = 0;    // n: outcome dimension
    Eigen::MatrixXd theta;  // K rows; n entries (mean) or n*n (precision)
    double objective = 0.0;
    std::vector<ResidualRecord> history;
    int iterations = 0;
    bool converged = false;

    std::size_t strata() const { return static_cast<std::size_t>(theta.rows()); }
    Eigen::VectorXd mean(std::size_t k) const;
    Eigen::MatrixXd precision(std::size_t k) const;
};

// ---------------------------------------------------------------------------
// Huber mean loss

/// H(z) = z^2 for |z| <= M, 2M|z| - M^2 otherwise.
double huber(double z, double m);
/// sum_t 1^T H(mu - y_t) over the rows of `data`.
double huber_loss(const Eigen::Ref<const Eigen::VectorXd>& mu, const Eigen::MatrixXd& data, double m);

/// argmin_x sum_t H(x - y_t) + (rho/2)(x - v)^2 for one coordinate.
double prox_huber_scalar(double v, std::span<const double> ys, double m, double rho);

/// One coordinate of a stratum's data, sorted, with prefix sums; the prox
/// then costs O(log n) per Newton step.
class SortedSample {
public:
    SortedSample() = default;
    explicit SortedSample(std::vector<double> ys);

    std::size_t size() const { return sorted_.size(); }
    /// Same result as prox_huber_scalar on the unsorted data.
    double prox(double v, double m, double rho) const;

private:
    std::vector<double> sorted_;
    std::vector<double> prefix_;  // prefix_[i] = sum of the first i values
};

/// argmin_mu sum_t 1^T H(mu - y_t) + (rho/2)||mu - v||^2, solved per entry.
Eigen::VectorXd prox_huber_mean(const Eigen::Ref<const Eigen::VectorXd>& v, const Eigen::MatrixXd& data,
                                double m, double rho);

// ---------------------------------------------------------------------------
// Log-det precision loss

/// log det of an SPD matrix via Cholesky; throws DomainError otherwise.
double logdet_spd(const Eigen::MatrixXd& theta);

/// Tr(S theta) - log det theta when the stratum participates, else 0.
double logdet_loss(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& s, bool participates = true);

/// argmin_T  c (Tr(S T) - log det T) + (rho/2)||T - V||_F^2  for c > 0, or
/// sym(V) when `include_loss` is false. Closed form from the
/// eigendecomposition of rho V - c S.
Eigen::MatrixXd prox_logdet_precision(const Eigen::MatrixXd& v, const Eigen::MatrixXd& s, double rho,
                                      bool include_loss = true, double c = 1.0);

// ---------------------------------------------------------------------------
// Laplacian step

/// Solves (L + rho I) X = rhs column by column with one cached LDL^T factor.
class LaplacianSolver {
public:
    LaplacianSolver(const Eigen::SparseMatrix<double>& laplacian, double rho);
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

private:
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor_;
};

Eigen::MatrixXd solve_regularized_laplacian(const Eigen::SparseMatrix<double>& laplacian, double rho,
                                            const Eigen::MatrixXd& rhs);

// ---------------------------------------------------------------------------
// Pluggable per-stratum objective

/// The separable part of the objective: loss_k + r for every stratum, in
/// flattened parameter coordinates.
class StratumObjective {
public:
    virtual ~StratumObjective() = default;

    virtual std::size_t strata() const = 0;
    virtual std::size_t param_size() const = 0;
    virtual Eigen::VectorXd initial() const = 0;
    virtual bool has_data(std::size_t k) const = 0;
    /// loss_k(theta) + r(theta).
    virtual double value(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& theta) const = 0;
    /// argmin value(k, .) + (rho/2)||. - v||^2.
    virtual Eigen::VectorXd prox(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& v,
                                 double rho) const = 0;
    /// When the term of every data-free stratum is exactly c ||theta||^2,
    /// returns c; data-free strata are then solved exactly at the end.
    virtual std::optional<double> empty_stratum_ridge() const = 0;
    /// Whether a data-free connected component with no local term is an
    /// error (no unique minimizer) rather than left at its initial value.
    virtual bool requires_identifiability() const = 0;
};

class HuberMeanObjective final : public StratumObjective {
public:
    HuberMeanObjective(const StratumDataset& data, double m, double local_weight);

    std::size_t strata() const override { return data_->strata(); }
    std::size_t param_size() const override { return data_->dim(); }
    Eigen::VectorXd initial() const override;
    bool has_data(std::size_t k) const override { return data_->count(k) > 0; }
    double value(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& theta) const override;
    Eigen::VectorXd prox(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& v,
                         double rho) const override;
    std::optional<double> empty_stratum_ridge() const override { return local_weight_; }
    bool requires_identifiability() const override { return true; }

private:
    const StratumDataset* data_;
    double m_;
    double local_weight_;
    std::vector<std::vector<SortedSample>> columns_;  // [stratum][coordinate]
};

class LogDetPrecisionObjective final : public StratumObjective {
public:
    LogDetPrecisionObjective(const StratumDataset& data, EmptyStratumMode mode, LossWeighting weighting);

    std::size_t strata() const override { return second_moments_.size(); }
    std::size_t param_size() const override { return n_ * n_; }
    Eigen::VectorXd initial() const override;
    bool has_data(std::size_t k) const override { return counts_[k] > 0; }
    double value(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& theta) const override;
    Eigen::VectorXd prox(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& v,
                         double rho) const override;
    std::optional<double> empty_stratum_ridge() const override;
    bool requires_identifiability() const override { return false; }

private:
    double weight(std::size_t k) const;

    std::size_t n_;
    std::vector<Eigen::MatrixXd> second_moments_;
    std::vector<std::size_t> counts_;
    EmptyStratumMode mode_;
    LossWeighting weighting_;
};

/// sum_k value(k, theta_k) + tr(Theta^T L Theta).
double eval_objective(const StratumObjective& objective, const Eigen::SparseMatrix<double>& laplacian,
                      const Eigen::MatrixXd& theta);

/// Builds the loss for `kind` from `config` and evaluates the objective.
double eval_objective(const Eigen::MatrixXd& theta, const StratumDataset& data, const FitConfig& config,
                      const graph::RegularizationGraph& graph, LossKind kind);

/// Generic ADMM driver over any stratum objective.
FitResult solve(const StratumObjective& objective, const graph::RegularizationGraph& graph,
                const FitConfig& config, LossKind kind);

/// Fits the huber-mean (r = local_weight ||mu||^2) or logdet-precision model.
FitResult fit(const StratumDataset& data, const graph::RegularizationGraph& graph, const FitConfig& config,
              LossKind kind);

}  // namespace stratport::fit
