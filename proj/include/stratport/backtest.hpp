#pragma once

// Daily simulation of the allocation policy with shorting and trading costs,
// plus performance analytics and factor attribution.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stratport/date.hpp"
#include "stratport/models.hpp"
#include "stratport/policy.hpp"

namespace stratport::backtest {

/// Aligned daily inputs. Rows are days. Returns are active (the benchmark
/// column is zero); spreads are full bid-ask spreads as fractions.
struct MarketData {
    std::vector<Date> dates;
    std::vector<std::string> assets;  // includes the benchmark
    std::size_t benchmark = 0;        // column of the benchmark
    Eigen::MatrixXd returns;
    Eigen::MatrixXd spreads;
    std::vector<std::size_t> strata;  // 0-based condition per day

    std::size_t days() const { return dates.size(); }
    void validate() const;
};

/// One-half the mean spread over the min(window, t) days before day t.
/// Throws InputError when t == 0 (no history).
Eigen::VectorXd trailing_half_spread(const Eigen::MatrixXd& spreads, std::size_t t, std::size_t window = 15);

struct BacktestResult {
    std::string label;
    std::vector<std::string> assets;
    std::vector<Date> dates;
    std::vector<std::size_t> strata;
    Eigen::MatrixXd weights;  // one row per simulated day
    std::vector<double> gross;
    std::vector<double> shorting;
    std::vector<double> trading;
    std::vector<double> net;
    std::vector<double> value;  // value after each day; the start value is 1
    std::vector<bool> held;     // policy failed, previous weights kept
    std::vector<std::string> notes;
    double gamma_sc = 0.0;
    double gamma_tc = 0.0;

    std::size_t days() const { return net.size(); }
    std::size_t held_days() const;
    /// sum_t ||w_t - w_{t-1}||_1 with w_{-1} the starting portfolio.
    double turnover(const Eigen::VectorXd& start) const;
};

/// Chooses w_t given the day, the previous weights and the trailing cost
/// estimate. Throwing NumericalError makes the simulator hold.
using Decision =
    std::function<Eigen::VectorXd(std::size_t t, const Eigen::VectorXd& w_prev, const Eigen::VectorXd& tau)>;

/// Simulates days [first, last) of `data`, starting from the all-benchmark
/// portfolio with value 1. `kappa` is the true shorting cost. Day 0 of the
/// panel has no spread history and is skipped if included.
BacktestResult simulate(const MarketData& data, std::size_t first, std::size_t last, const Decision& decide,
                        const Eigen::VectorXd& kappa, std::size_t window = 15);

/// Simulates the allocation policy driven by a mean and a precision model
/// (either stratified or single-stratum common models). Model assets are the
/// non-benchmark columns of `data`, in order.
BacktestResult run_backtest(const MarketData& data, std::size_t first, std::size_t last,
                            const models::MeanModel& mean, const models::PrecisionModel& risk,
                            const policy::PolicyParams& params, const std::string& label = "stratified",
                            const policy::SolverOptions& options = {}, std::size_t window = 15);

/// Net return, gross - shorting - trading, from stored weights.
double net_return(const Eigen::VectorXd& r, const Eigen::VectorXd& w, const Eigen::VectorXd& w_prev,
                  const Eigen::VectorXd& kappa, const Eigen::VectorXd& tau_sim);

struct PerformanceReport {
    std::size_t days = 0;
    double annual_return = 0.0;  // (prod (1 + r))^(250/T) - 1
    double annual_risk = 0.0;    // sqrt(250) * sample stdev
    std::optional<double> sharpe;
    double max_drawdown = 0.0;

    /// Throws DomainError when the risk is zero.
    double sharpe_ratio() const;
};

/// Needs at least 2 returns.
PerformanceReport performance_metrics(std::span<const double> net);
PerformanceReport performance_metrics(const BacktestResult& result);

/// Annualized geometric return of a subset of days.
double annualized_return(std::span<const double> net);

/// max_t (1 - v_t / max_{s<=t} v_s), including the start value 1.
double max_drawdown(std::span<const double> net);

struct FactorRegression {
    std::vector<std::string> factors;
    Eigen::VectorXd coefficients;
    double alpha = 0.0;         // daily intercept
    double annual_alpha = 0.0;  // 250 * alpha
    double r_squared = 0.0;
    std::size_t observations = 0;
};

/// OLS of y on an intercept and the columns of `factors`. Needs at least 6
/// observations; a rank-deficient design throws RegressionError.
FactorRegression factor_regression(std::span<const double> y, const Eigen::MatrixXd& factors,
                                   std::vector<std::string> names = {"MKTRF", "SMB", "HML", "UMD"});

/// Per-day ledger as tab-separated text.
std::string ledger_tsv(const BacktestResult& result);
/// key<TAB>value lines.
std::string report_text(const PerformanceReport& report);

}  // namespace stratport::backtest
