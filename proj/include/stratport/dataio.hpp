#pragma once

// Date-indexed panels: CSV ingestion, active returns, winsorization, the
// train/validation/test split, indicator diagnostics and a synthetic market
// generator with known ground truth.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stratport/date.hpp"
#include "stratport/strat_fit.hpp"
#include "stratport/strata_graph.hpp"

namespace stratport::data {

/// Rows are dates (strictly increasing), columns are named series.
struct Panel {
    std::vector<Date> dates;
    std::vector<std::string> columns;
    Eigen::MatrixXd values;

    std::size_t rows() const { return dates.size(); }
    /// Throws InputError when the column is missing.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;
    Panel select_rows(const std::vector<std::size_t>& rows) const;
    Panel rows_in(const DateRange& range) const;
    std::vector<std::size_t> row_indices(const DateRange& range) const;
    void validate() const;
};

struct IngestLog {
    std::string source;
    std::size_t rows_read = 0;
    std::size_t rows_dropped = 0;  // rows with a missing cell
};

/// Header "date,NAME1,...". Lines starting with '#' are skipped. Empty, "NA" or "nan" cells mark the row missing;
/// such rows are dropped and counted. Anything else malformed throws
/// InputError naming the source and line.
Panel read_csv(std::istream& in, const std::string& source, IngestLog* log = nullptr);
Panel read_csv_file(const std::string& path, IngestLog* log = nullptr);

/// Shortest round-trip formatting, so reading back is bit-exact.
std::string to_csv(const Panel& panel);
void write_csv_file(const std::string& path, const Panel& panel);

/// Restricts every panel to the dates present in all of them.
std::vector<Panel> inner_join(const std::vector<Panel>& panels);

/// Subtracts the benchmark column from every column (the benchmark column
/// becomes zero).
Panel compute_active_returns(const Panel& panel, const std::string& benchmark);

struct WinsorLimits {
    std::vector<double> lo;
    std::vector<double> hi;
};

/// Per-column quantiles of the rows in `fit_range`, taken as the order
/// statistic of rank round(p * (N - 1)) (0-based).
WinsorLimits winsor_limits(const Panel& panel, const DateRange& fit_range, double lo = 0.01, double hi = 0.99);

/// Clips rows inside `fit_range` to limits computed on those rows; rows
/// outside are copied unchanged.
Panel winsorize(const Panel& panel, const DateRange& fit_range, double lo = 0.01, double hi = 0.99);

struct SplitSpec {
    DateRange model;
    DateRange test;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Row indices into the panel; each list ascending.
struct RecordSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

/// Model-period rows are shuffled (seeded Fisher-Yates); the first
/// floor(fraction * N) become validation. Test rows stay in date order.
RecordSplit split_records(const std::vector<Date>& dates, const SplitSpec& spec);

struct SplitData {
    RecordSplit rows;
    fit::StratumDataset train;
    fit::StratumDataset validation;
};

/// Groups the outcome rows of each part by stratum.
SplitData split(const Panel& outcomes, const std::vector<std::size_t>& strata, std::size_t strata_count,
                const SplitSpec& spec);

/// Pearson correlations between the columns over `fit_range`. A constant
/// column throws UndefinedCorrelationError.
Eigen::MatrixXd indicator_diagnostics(const Panel& indicators, const DateRange& fit_range);

/// Trailing mean of `window` values ending `lag` entries before each
/// position; NaN where the history is too short.
std::vector<double> moving_average(const std::vector<double>& values, std::size_t window = 15, std::size_t lag = 1);

/// Inner-joined market data with the indicator series lagged: the condition
/// of return day t comes from the indicator row of the previous trading day.
struct Records {
    Panel returns;     // active, benchmark column included
    Panel spreads;
    Panel indicators;  // lagged, same dates as returns
    std::string benchmark;
};

Records align_records(const Panel& raw_returns, const Panel& spreads, const Panel& indicators,
                      const std::string& benchmark);

/// Condition of every row of an (already lagged) indicator panel.
std::vector<graph::MarketCondition> assign_conditions(const Panel& indicators, const graph::DecileBins& bins);

/// Mean of ||z_{t+1} - z_t||_1 over consecutive rows.
double mean_condition_step(const std::vector<graph::MarketCondition>& z);

// ---------------------------------------------------------------------------
// Synthetic markets

struct GroundTruth {
    std::vector<int> dims;
    std::vector<std::string> assets;    // non-benchmark assets
    std::vector<Eigen::VectorXd> mu;    // per stratum, active daily fraction
    std::vector<Eigen::MatrixXd> sigma; // per stratum, SPD

    /// Throws InputError on size mismatch or a covariance that is not SPD.
    void validate() const;
};

/// Means linear in the condition levels (so neighbouring strata are close)
/// and volatilities scaled by the first indicator's level.
GroundTruth regime_ground_truth(const std::vector<int>& dims, std::size_t assets, std::uint64_t seed,
                                double signal = 0.0008, double volatility = 0.006);

struct SynthOptions {
    std::size_t days = 0;
    std::uint64_t seed = 0;
    double move_probability = 0.0867;  // per coordinate per day
    double offset_persistence = 0.98;  // AR(1) coefficient of the within-level position
    std::string benchmark = "BM";
    double benchmark_mean = 0.0003;
    double benchmark_volatility = 0.008;
    double spread_low = 0.0002;   // per-asset base spread drawn in [low, high]
    double spread_high = 0.0015;
    double spread_noise = 0.25;   // relative daily noise
    Date start{Date(2006, 3, 1)};
    std::vector<std::string> indicator_names{"vix15", "inflation", "mortgage30"};
};

struct SynthMarket {
    Panel returns;     // raw returns, benchmark in the last column
    Panel spreads;
    Panel indicators;  // row t encodes the condition of day t+1
    std::vector<graph::MarketCondition> conditions;  // true condition of each day
    GroundTruth truth;
};

/// Condition path: every coordinate moves to a uniformly chosen neighbour
/// level with `move_probability` (moves off the grid are rejected). The
/// indicator is level - 1 plus a slowly varying position inside (0, 1), so
/// quantile bins recover the levels up to drift across a cut. Active
/// returns are Gaussian with the stratum's ground truth. Business days only.
SynthMarket synth_generate(const GroundTruth& truth, const SynthOptions& options);

}  // namespace stratport::data
