// stratport: batch front end. Errors are reported on stderr as one JSON line.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stratport/commands.hpp"
#include "stratport/error.hpp"

namespace {

int fail(int code, const std::string& kind, const std::string& command, const std::string& message) {
    nlohmann::ordered_json e;
    e["error"] = kind;
    e["command"] = command;
    e["message"] = message;
    e["exit_code"] = code;
    std::cerr << e.dump() << std::endl;
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace stratport;
    CLI::App app{"Stratified return and risk models, allocation policy and backtest"};
    app.require_subcommand(1);

    commands::Options opt;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opt.config, "run configuration (JSON)");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory")->capture_default_str();
        sub->add_option("--jobs", opt.jobs, "worker threads for grid searches")->check(CLI::Range(1, 256));
        sub->add_option("--seed", seed, "overrides the config seed");
    };

    auto* ingest = app.add_subcommand("ingest", "validate inputs, write aligned records and indicator diagnostics");
    auto* bin = app.add_subcommand("bin", "quantile bins, condition series and regularization graph");
    auto* tune_return = app.add_subcommand("tune-return", "grid search for the return model");
    auto* tune_risk = app.add_subcommand("tune-risk", "grid search for the risk model");
    auto* fit_return = app.add_subcommand("fit-return", "fit stratified and common return models");
    auto* fit_risk = app.add_subcommand("fit-risk", "fit stratified and common risk models");
    auto* tune_policy = app.add_subcommand("tune-policy", "grid search over the policy aversion parameters");
    auto* backtest = app.add_subcommand("backtest", "simulate the test period");
    auto* run_all = app.add_subcommand("run", "every step for the stratified policy and the common baseline");
    auto* synth = app.add_subcommand("synth", "write a synthetic dataset with known ground truth");

    for (auto* s : {ingest, bin, tune_return, tune_risk, fit_return, fit_risk, tune_policy, backtest, run_all}) {
        add_common(s, true);
    }
    add_common(synth, false);
    for (auto* s : {fit_return, fit_risk}) {
        s->add_flag("--refit-all", opt.refit_all, "fit on train and validation records together");
    }
    std::string baseline;
    for (auto* s : {tune_policy, backtest}) {
        s->add_option("--baseline", baseline, "'common' runs the common-model policy")->check(CLI::IsMember({"common"}));
    }
    commands::SynthSpec spec;
    synth->add_option("--assets", spec.assets, "non-benchmark assets")->capture_default_str();
    synth->add_option("--levels", spec.levels, "levels per indicator")->capture_default_str();
    synth->add_option("--model-days", spec.model_days)->capture_default_str();
    synth->add_option("--test-days", spec.test_days)->capture_default_str();
    synth->add_option("--policy-count", spec.policy_count, "policy grid points per axis")->capture_default_str();
    synth->add_flag("--fine-grids", spec.fine_grids, "add the fine tuning stages to the config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail(2, "usage", "", e.what());
    }

    CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    if (chosen->count("--seed") > 0) opt.seed = seed;
    opt.common = baseline == "common";
    try {
        if (chosen == ingest) commands::ingest(opt);
        else if (chosen == bin) commands::bin(opt);
        else if (chosen == tune_return) commands::tune_return(opt);
        else if (chosen == tune_risk) commands::tune_risk(opt);
        else if (chosen == fit_return) commands::fit_return(opt);
        else if (chosen == fit_risk) commands::fit_risk(opt);
        else if (chosen == tune_policy) commands::tune_policy(opt);
        else if (chosen == backtest) commands::backtest(opt);
        else if (chosen == run_all) commands::run_all(opt);
        else commands::synth(opt, spec);
    } catch (const InputError& e) {
        return fail(2, "input", name, e.what());
    } catch (const NumericalError& e) {
        return fail(3, "numerical", name, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(2, "input", name, e.what());
    } catch (const std::exception& e) {
        return fail(1, "internal", name, e.what());
    }
    return 0;
}
