#pragma once

// Stratified return (mean) and risk (precision) models built on strat-fit,
// the pooled common-model baselines, and the validation metrics.
//
// Models store parameters in fraction units (daily returns as fractions).
// Fitting happens on returns multiplied by `unit_scale` (percent by default):
// for the mean model this is an exact reparametrization, for the risk model
// the Laplacian weights are only meaningful relative to a unit choice.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stratport/strat_fit.hpp"
#include "stratport/strata_graph.hpp"

namespace stratport::models {

struct FitOptions {
    double unit_scale = 100.0;
    double rho = 1.0;
    bool adaptive_rho = true;
    int max_iterations = 20000;
    double tol_abs = 1e-6;
    double tol_rel = 1e-5;
    fit::EmptyStratumMode empty_mode = fit::EmptyStratumMode::drop;
    fit::LossWeighting weighting = fit::LossWeighting::equal;
    int threads = 1;
};

/// What a model was fit with; carried into every model file.
struct ModelInfo {
    std::vector<int> dims;                 // grid shape; {1} for common models
    std::vector<std::string> group_names;  // edge-group names
    double local_weight = 0.0;
    std::vector<double> laplacian_weights;
    double huber_m = 0.0;
    double unit_scale = 100.0;
    bool common = false;
    bool converged = true;
    int iterations = 0;
    double objective = 0.0;
};

struct MeanModel {
    std::vector<std::string> assets;
    Eigen::MatrixXd mu;  // K x n, fraction units
    ModelInfo info;

    std::size_t strata() const { return static_cast<std::size_t>(mu.rows()); }
    Eigen::VectorXd forecast(std::size_t k) const { return mu.row(static_cast<Eigen::Index>(k)).transpose(); }
    void validate() const;
};

struct PrecisionModel {
    std::vector<std::string> assets;
    std::vector<Eigen::MatrixXd> theta;  // K SPD n x n, inverse fraction units squared
    ModelInfo info;

    std::size_t strata() const { return theta.size(); }
    Eigen::MatrixXd covariance(std::size_t k) const;
    void validate() const;
};

MeanModel fit_return_model(const fit::StratumDataset& train, const graph::RegularizationGraph& graph,
                           double local_weight, const std::vector<double>& laplacian_weights,
                           const std::vector<std::string>& assets, double huber_m = 0.01,
                           const FitOptions& options = {});

PrecisionModel fit_risk_model(const fit::StratumDataset& train, const graph::RegularizationGraph& graph,
                              const std::vector<double>& laplacian_weights, const std::vector<std::string>& assets,
                              const FitOptions& options = {});

/// Pooled empirical mean, repeated for `strata` strata.
MeanModel common_return_model(const fit::StratumDataset& train, const std::vector<std::string>& assets,
                              std::size_t strata = 1);

/// Inverse of the pooled second moment (1/N) sum y y^T, repeated for `strata`.
PrecisionModel common_risk_model(const fit::StratumDataset& train, const std::vector<std::string>& assets,
                                 std::size_t strata = 1, double unit_scale = 100.0);

/// Pearson correlation of forecasts and realizations over all
/// (record, asset) pairs. Strata of `data` index the model's strata; a
/// model with one stratum is applied to every record.
double validation_correlation(const MeanModel& model, const fit::StratumDataset& data);

/// (1/N) sum_t y^T theta y - log det theta with y in units of
/// `unit_scale` (theta rescaled accordingly).
double validation_nll(const PrecisionModel& model, const fit::StratumDataset& data, double unit_scale = 1.0);

/// Per-asset table; rows are assets, columns named in `columns`.
struct SummaryTable {
    std::string title;
    std::vector<std::string> columns;
    std::vector<std::string> rows;
    Eigen::MatrixXd values;
};

/// common / median / min / max of the forecasts over all strata, in
/// percent daily return.
SummaryTable return_summary(const MeanModel& model, const MeanModel& common);
/// Volatilities sqrt((Sigma_z)_ii) in percent daily return.
SummaryTable volatility_summary(const PrecisionModel& model, const PrecisionModel& common);
/// Correlation of every asset with `reference`.
SummaryTable correlation_summary(const PrecisionModel& model, const PrecisionModel& common,
                                 const std::string& reference);

/// Tab-separated text with a header row.
std::string to_tsv(const SummaryTable& table);

/// Median with the two-middle average for even counts.
double median(std::vector<double> values);

}  // namespace stratport::models
