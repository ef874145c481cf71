#pragma once

// CLI subcommands as library calls. Each reads the config and earlier
// artifacts from the output directory and writes its own artifacts there.
// Every artifact carries the config hash and seed.

#include <cstdint>
#include <optional>
#include <string>

namespace stratport::commands {

struct Options {
    std::string config;  // path; synth ignores it
    std::string out = ".";
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    bool refit_all = false;         // fit-return / fit-risk
    bool common = false;            // --baseline common for tune-policy / backtest
};

struct SynthSpec {
    std::size_t assets = 6;
    int levels = 3;
    std::size_t model_days = 5000;
    std::size_t test_days = 1250;
    int policy_count = 25;
    bool fine_grids = false;  // the fine presets are tailored to decile grids
};

void ingest(const Options& o);
void bin(const Options& o);
void tune_return(const Options& o);
void tune_risk(const Options& o);
void fit_return(const Options& o);
void fit_risk(const Options& o);
void tune_policy(const Options& o);
void backtest(const Options& o);
/// Writes returns.csv, spreads.csv, indicators.csv, factors.csv, truth.json
/// and config.json into o.out.
void synth(const Options& o, const SynthSpec& spec);
/// Every step in order, for the stratified policy and the common baseline.
void run_all(const Options& o);

}  // namespace stratport::commands
