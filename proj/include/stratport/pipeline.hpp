#pragma once

// The end-to-end workflow on loaded data: run configuration, the prepared
// market (records, bins, conditions, graph, split), hyper-parameter tuning
// for the three stages, model fitting and the test backtest. File output
// lives in commands.hpp.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stratport/backtest.hpp"
#include "stratport/dataio.hpp"
#include "stratport/models.hpp"
#include "stratport/serialize.hpp"
#include "stratport/strata_graph.hpp"
#include "stratport/tuner.hpp"

namespace stratport::pipeline {

struct InputPaths {
    std::string returns;
    std::string spreads;
    std::string indicators;
    std::string factors;  // optional, empty when absent
};

struct ReturnHyper {
    double local = 0.0;
    std::vector<double> weights;  // one per graph group
};

struct RiskHyper {
    std::vector<double> weights;
};

struct PolicyGammas {
    double gamma_sc = 0.0;
    double gamma_tc = 0.0;
};

struct RunConfig {
    std::string base_dir;  // relative input paths resolve against this
    InputPaths inputs;
    std::string benchmark = "VTI";
    std::vector<std::string> groups;  // edge-group name per indicator; defaults to the indicator names
    DateRange model;
    DateRange test;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
    int levels = 10;
    double winsor_lo = 0.01;
    double winsor_hi = 0.99;
    double huber_m = 0.01;
    double kappa = 0.0005;
    double sigma = 0.0045;
    double leverage = 2.0;
    double w_min = -0.25;
    double w_max = 0.4;
    std::size_t spread_window = 15;
    std::vector<tune::Grid> return_grids;  // run in order; the last stage decides
    std::vector<tune::Grid> risk_grids;
    tune::Grid policy_grid;
    double tolerance = 0.01;
    models::FitOptions fit;
    std::optional<ReturnHyper> fixed_return;
    std::optional<RiskHyper> fixed_risk;
    std::optional<PolicyGammas> fixed_policy;
    std::string correlation_reference = "AGG";

    /// Parses the config document. Grids may be preset names
    /// ("coarse", "fine") or explicit {"stage", "axes"} objects.
    static RunConfig from_json(const io::Json& j, const std::string& base_dir);
    /// Effective configuration (after overrides), used for the hash.
    io::Json to_json() const;
    /// FNV-1a of the compact effective configuration.
    std::string hash() const;
    /// "config <hash> seed <seed>"
    std::string provenance() const;
    std::string resolve(const std::string& path) const;
    void validate() const;
};

/// Reads a config file; `seed` overrides the file's seed when given.
RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed = std::nullopt);

struct Market {
    data::Records records;
    std::vector<data::IngestLog> logs;
    graph::DecileBins bins;
    graph::RegularizationGraph graph;
    std::vector<graph::MarketCondition> conditions;  // one per record
    std::vector<std::string> assets;                 // non-benchmark, model order
    data::Panel outcomes;                            // winsorized active returns of `assets`
    data::SplitData split;
    backtest::MarketData backtest;                   // unwinsorized, all assets
    std::vector<std::size_t> model_rows;
    std::vector<std::size_t> test_rows;

    std::size_t strata() const { return graph.nodes; }
    /// Strata with at least one model-period record.
    std::size_t populated_strata() const;
};

Market prepare_market(const RunConfig& config, const data::Panel& raw_returns, const data::Panel& spreads,
                      const data::Panel& indicators);
/// Reads the three input files named in the config.
Market load_market(const RunConfig& config);

/// Maps a grid combination onto hyper-parameters by axis name ("local" plus
/// the group names).
ReturnHyper return_hyper(const tune::Grid& grid, const std::vector<double>& values,
                         const std::vector<std::string>& groups);
RiskHyper risk_hyper(const tune::Grid& grid, const std::vector<double>& values,
                     const std::vector<std::string>& groups);

/// Every stage on train, scored on validation. Returns one result per stage.
std::vector<tune::TuneResult> tune_return(const Market& market, const RunConfig& config, int jobs = 1);
std::vector<tune::TuneResult> tune_risk(const Market& market, const RunConfig& config, int jobs = 1);

/// Training data: train only, or train plus validation when `all`.
fit::StratumDataset training_data(const Market& market, bool all);

models::MeanModel fit_return(const Market& market, const RunConfig& config, const ReturnHyper& hyper, bool all);
models::PrecisionModel fit_risk(const Market& market, const RunConfig& config, const RiskHyper& hyper, bool all);
models::MeanModel fit_common_return(const Market& market, bool all);
models::PrecisionModel fit_common_risk(const Market& market, const RunConfig& config, bool all);

policy::PolicyParams policy_params(const RunConfig& config, std::size_t assets, const PolicyGammas& gammas);

/// Validation score of one (gamma_sc, gamma_tc) pair: the policy runs day by
/// day through the model period with the given models; the score is the
/// annualized return over the validation days.
double policy_score(const Market& market, const RunConfig& config, const models::MeanModel& mean,
                    const models::PrecisionModel& risk, const PolicyGammas& gammas);

tune::TuneResult tune_policy(const Market& market, const RunConfig& config, const models::MeanModel& mean,
                             const models::PrecisionModel& risk, int jobs = 1);

/// Simulates the test period.
backtest::BacktestResult test_backtest(const Market& market, const RunConfig& config, const models::MeanModel& mean,
                                       const models::PrecisionModel& risk, const PolicyGammas& gammas,
                                       const std::string& label);

}  // namespace stratport::pipeline
