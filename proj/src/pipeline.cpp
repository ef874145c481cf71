#include "stratport/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "stratport/error.hpp"
#include "stratport/text.hpp"

namespace stratport::pipeline {

namespace {

using io::Json;

DateRange range_of(const Json& j, const char* what) {
    if (!j.is_array() || j.size() != 2) throw InputError(std::string(what) + " must be [first, last]");
    return {Date::parse(j[0].get<std::string>()), Date::parse(j[1].get<std::string>())};
}

Json range_json(const DateRange& r) { return Json::array({r.first.str(), r.last.str()}); }

tune::Grid grid_entry(const Json& j, bool return_stage) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "coarse") return return_stage ? tune::presets::return_coarse() : tune::presets::risk_coarse();
        if (name == "fine") return return_stage ? tune::presets::return_fine() : tune::presets::risk_fine();
        throw InputError("unknown grid preset '" + name + "'");
    }
    return io::grid_from_json(j);
}

std::vector<tune::Grid> grid_list(const Json& j, bool return_stage) {
    std::vector<tune::Grid> out;
    if (j.is_array()) {
        for (const auto& e : j) out.push_back(grid_entry(e, return_stage));
    } else {
        out.push_back(grid_entry(j, return_stage));
    }
    if (out.empty()) throw InputError("a tuning stage list is empty");
    return out;
}

template <typename T>
void read_opt(const Json& j, const char* key, T& into) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
        into = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("config field '") + key + "': " + e.what());
    }
}

double axis_value(const tune::Grid& grid, const std::vector<double>& values, const std::string& name) {
    for (std::size_t a = 0; a < grid.axes.size(); ++a) {
        if (grid.axes[a].name == name) return values.at(a);
    }
    throw InputError("grid has no axis named '" + name + "'");
}

}  // namespace

RunConfig RunConfig::from_json(const Json& j, const std::string& base_dir) {
    if (!j.is_object()) throw InputError("config must be a JSON object");
    RunConfig c;
    c.base_dir = base_dir;
    try {
        const auto& in = j.at("inputs");
        c.inputs.returns = in.at("returns").get<std::string>();
        c.inputs.spreads = in.at("spreads").get<std::string>();
        c.inputs.indicators = in.at("indicators").get<std::string>();
        read_opt(in, "factors", c.inputs.factors);
        read_opt(j, "benchmark", c.benchmark);
        read_opt(j, "groups", c.groups);
        c.model = range_of(j.at("periods").at("model"), "periods.model");
        c.test = range_of(j.at("periods").at("test"), "periods.test");
        read_opt(j, "validation_fraction", c.validation_fraction);
        read_opt(j, "seed", c.seed);
        read_opt(j, "levels", c.levels);
        if (j.contains("winsor")) {
            const auto w = j.at("winsor").get<std::vector<double>>();
            if (w.size() != 2) throw InputError("winsor must be [lo, hi]");
            c.winsor_lo = w[0];
            c.winsor_hi = w[1];
        }
        read_opt(j, "huber_m", c.huber_m);
        if (j.contains("policy")) {
            const auto& p = j.at("policy");
            read_opt(p, "kappa", c.kappa);
            read_opt(p, "sigma", c.sigma);
            read_opt(p, "leverage", c.leverage);
            read_opt(p, "w_min", c.w_min);
            read_opt(p, "w_max", c.w_max);
            read_opt(p, "spread_window", c.spread_window);
        }
        const Json tuning = j.value("tuning", Json::object());
        c.return_grids = grid_list(tuning.value("return", Json::array({"coarse", "fine"})), true);
        c.risk_grids = grid_list(tuning.value("risk", Json::array({"coarse", "fine"})), false);
        const Json pol = tuning.value("policy", Json::object());
        c.policy_grid = pol.contains("axes") ? io::grid_from_json(pol)
                                             : tune::presets::policy(pol.value("count", 25), pol.value("lo", 0.1),
                                                                     pol.value("hi", 10.0));
        read_opt(tuning, "tolerance", c.tolerance);
        if (j.contains("fit")) {
            const auto& f = j.at("fit");
            read_opt(f, "unit_scale", c.fit.unit_scale);
            read_opt(f, "rho", c.fit.rho);
            read_opt(f, "adaptive_rho", c.fit.adaptive_rho);
            read_opt(f, "max_iterations", c.fit.max_iterations);
            read_opt(f, "tol_abs", c.fit.tol_abs);
            read_opt(f, "tol_rel", c.fit.tol_rel);
        }
        read_opt(j, "correlation_reference", c.correlation_reference);
        if (j.contains("fixed")) {
            const auto& f = j.at("fixed");
            // group weights are filled in once the indicator names are known
            if (f.contains("return")) {
                ReturnHyper h;
                h.local = f.at("return").at("local").get<double>();
                c.fixed_return = h;
            }
            if (f.contains("risk")) c.fixed_risk = RiskHyper{};
            if (f.contains("policy")) {
                c.fixed_policy = PolicyGammas{f.at("policy").at("gamma_sc").get<double>(),
                                              f.at("policy").at("gamma_tc").get<double>()};
            }
        }
        if (c.groups.empty()) {
            // the group names must be known before weights can be read
            if (c.fixed_return || c.fixed_risk) {
                throw InputError("fixed hyper-parameters need an explicit 'groups' list");
            }
        }
        for (const auto& [key, target] : {std::pair<const char*, std::vector<double>*>{
                                              "return", c.fixed_return ? &c.fixed_return->weights : nullptr},
                                          {"risk", c.fixed_risk ? &c.fixed_risk->weights : nullptr}}) {
            if (!target) continue;
            const auto& f = j.at("fixed").at(key);
            for (const auto& g : c.groups) target->push_back(f.at(g).get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

Json RunConfig::to_json() const {
    Json j;
    j["inputs"] = {{"returns", inputs.returns}, {"spreads", inputs.spreads}, {"indicators", inputs.indicators}};
    if (!inputs.factors.empty()) j["inputs"]["factors"] = inputs.factors;
    j["benchmark"] = benchmark;
    if (!groups.empty()) j["groups"] = groups;
    j["periods"] = {{"model", range_json(model)}, {"test", range_json(test)}};
    j["validation_fraction"] = validation_fraction;
    j["seed"] = seed;
    j["levels"] = levels;
    j["winsor"] = {winsor_lo, winsor_hi};
    j["huber_m"] = huber_m;
    j["policy"] = {{"kappa", kappa},       {"sigma", sigma}, {"leverage", leverage},
                   {"w_min", w_min},       {"w_max", w_max}, {"spread_window", spread_window}};
    Json ret = Json::array(), risk = Json::array();
    for (const auto& g : return_grids) ret.push_back(io::to_json(g));
    for (const auto& g : risk_grids) risk.push_back(io::to_json(g));
    j["tuning"] = {{"return", ret}, {"risk", risk}, {"policy", io::to_json(policy_grid)}, {"tolerance", tolerance}};
    j["fit"] = {{"unit_scale", fit.unit_scale}, {"rho", fit.rho},         {"adaptive_rho", fit.adaptive_rho},
                {"max_iterations", fit.max_iterations}, {"tol_abs", fit.tol_abs}, {"tol_rel", fit.tol_rel}};
    Json fixed = Json::object();
    if (fixed_return) {
        Json r{{"local", fixed_return->local}};
        for (std::size_t g = 0; g < groups.size(); ++g) r[groups[g]] = fixed_return->weights[g];
        fixed["return"] = r;
    }
    if (fixed_risk) {
        Json r = Json::object();
        for (std::size_t g = 0; g < groups.size(); ++g) r[groups[g]] = fixed_risk->weights[g];
        fixed["risk"] = r;
    }
    if (fixed_policy) fixed["policy"] = {{"gamma_sc", fixed_policy->gamma_sc}, {"gamma_tc", fixed_policy->gamma_tc}};
    if (!fixed.empty()) j["fixed"] = fixed;
    j["correlation_reference"] = correlation_reference;
    return j;
}

std::string RunConfig::hash() const { return text::fnv1a_hex(to_json().dump()); }

std::string RunConfig::provenance() const { return "config " + hash() + " seed " + std::to_string(seed); }

std::string RunConfig::resolve(const std::string& path) const {
    if (path.empty() || base_dir.empty() || std::filesystem::path(path).is_absolute()) return path;
    return (std::filesystem::path(base_dir) / path).string();
}

void RunConfig::validate() const {
    if (model.last < model.first) throw InputError("model period ends before it starts");
    if (test.last < test.first) throw InputError("test period ends before it starts");
    if (model.overlaps(test)) throw InputError("model and test periods overlap");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw InputError("validation_fraction must lie in (0, 1)");
    }
    if (levels < 2) throw InputError("levels must be at least 2");
    if (!(0.0 <= winsor_lo && winsor_lo < winsor_hi && winsor_hi <= 1.0)) throw InputError("bad winsor limits");
    if (!(huber_m > 0.0)) throw InputError("huber_m must be positive");
    if (!(sigma > 0.0) || !(leverage >= 1.0) || !(kappa >= 0.0) || !(w_min <= w_max)) {
        throw InputError("bad policy constants");
    }
    if (spread_window == 0) throw InputError("spread_window must be positive");
    for (const auto& g : return_grids) g.validate();
    for (const auto& g : risk_grids) g.validate();
    policy_grid.validate();
}

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
    const auto j = io::read_json_file(path);
    auto c = RunConfig::from_json(j, std::filesystem::path(path).parent_path().string());
    if (seed) c.seed = *seed;
    return c;
}

std::size_t Market::populated_strata() const {
    std::vector<bool> seen(strata(), false);
    for (std::size_t r : model_rows) seen[conditions[r].stratum()] = true;
    return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
}

Market prepare_market(const RunConfig& config, const data::Panel& raw_returns, const data::Panel& spreads,
                      const data::Panel& indicators) {
    config.validate();
    Market m;
    m.records = data::align_records(raw_returns, spreads, indicators, config.benchmark);
    const auto& ret = m.records.returns;
    const std::size_t bench = ret.column(config.benchmark);

    const auto& ind = m.records.indicators;
    m.bins.names = ind.columns;
    m.bins.fit_range = config.model;
    m.bins.levels = config.levels;
    for (std::size_t j = 0; j < ind.columns.size(); ++j) {
        const Eigen::VectorXd col = ind.values.col(static_cast<Eigen::Index>(j));
        m.bins.boundaries.push_back(graph::compute_decile_bins(
            ind.dates, std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), config.model,
            config.levels));
    }
    m.bins.validate();
    m.conditions = data::assign_conditions(ind, m.bins);

    std::vector<std::string> groups = config.groups.empty() ? ind.columns : config.groups;
    if (groups.size() != ind.columns.size()) {
        throw InputError("config lists " + std::to_string(groups.size()) + " groups for " +
                         std::to_string(ind.columns.size()) + " indicators");
    }
    m.graph = graph::build_product_chain_graph(std::vector<int>(ind.columns.size(), config.levels), groups);

    m.model_rows = ret.row_indices(config.model);
    m.test_rows = ret.row_indices(config.test);
    if (m.model_rows.empty()) throw InputError("no records in the model period");
    if (m.test_rows.empty()) throw InputError("no records in the test period");

    std::vector<Eigen::Index> keep;
    for (std::size_t c = 0; c < ret.columns.size(); ++c) {
        if (c == bench) continue;
        m.assets.push_back(ret.columns[c]);
        keep.push_back(static_cast<Eigen::Index>(c));
    }
    if (m.assets.empty()) throw InputError("no assets besides the benchmark");
    data::Panel active;
    active.dates = ret.dates;
    active.columns = m.assets;
    active.values = ret.values(Eigen::all, keep);
    m.outcomes = data::winsorize(active, config.model, config.winsor_lo, config.winsor_hi);

    std::vector<std::size_t> strata;
    strata.reserve(m.conditions.size());
    for (const auto& z : m.conditions) strata.push_back(z.stratum());
    data::SplitSpec spec{config.model, config.test, config.validation_fraction, config.seed};
    m.split = data::split(m.outcomes, strata, m.graph.nodes, spec);

    m.backtest.dates = ret.dates;
    m.backtest.assets = ret.columns;
    m.backtest.benchmark = bench;
    m.backtest.returns = ret.values;
    m.backtest.spreads = m.records.spreads.values;
    m.backtest.strata = std::move(strata);
    m.backtest.validate();
    return m;
}

Market load_market(const RunConfig& config) {
    std::vector<data::IngestLog> logs(3);
    const auto r = data::read_csv_file(config.resolve(config.inputs.returns), &logs[0]);
    const auto s = data::read_csv_file(config.resolve(config.inputs.spreads), &logs[1]);
    const auto i = data::read_csv_file(config.resolve(config.inputs.indicators), &logs[2]);
    auto m = prepare_market(config, r, s, i);
    // as written in the config, so outputs do not depend on the working directory
    logs[0].source = config.inputs.returns;
    logs[1].source = config.inputs.spreads;
    logs[2].source = config.inputs.indicators;
    m.logs = std::move(logs);
    return m;
}

ReturnHyper return_hyper(const tune::Grid& grid, const std::vector<double>& values,
                         const std::vector<std::string>& groups) {
    ReturnHyper h;
    h.local = axis_value(grid, values, "local");
    for (const auto& g : groups) h.weights.push_back(axis_value(grid, values, g));
    return h;
}

RiskHyper risk_hyper(const tune::Grid& grid, const std::vector<double>& values,
                     const std::vector<std::string>& groups) {
    RiskHyper h;
    for (const auto& g : groups) h.weights.push_back(axis_value(grid, values, g));
    return h;
}

std::vector<tune::TuneResult> tune_return(const Market& market, const RunConfig& config, int jobs) {
    std::vector<tune::TuneResult> out;
    for (const auto& grid : config.return_grids) {
        auto opts = config.fit;
        opts.threads = 1;
        const auto eval = [&](const std::vector<double>& v) {
            const auto h = return_hyper(grid, v, market.graph.groups);
            const auto model = models::fit_return_model(market.split.train, market.graph, h.local, h.weights,
                                                        market.assets, config.huber_m, opts);
            return models::validation_correlation(model, market.split.validation);
        };
        out.push_back(tune::grid_search(grid, eval, tune::Direction::maximize, jobs, config.tolerance));
    }
    return out;
}

std::vector<tune::TuneResult> tune_risk(const Market& market, const RunConfig& config, int jobs) {
    std::vector<tune::TuneResult> out;
    for (const auto& grid : config.risk_grids) {
        auto opts = config.fit;
        opts.threads = 1;
        const auto eval = [&](const std::vector<double>& v) {
            const auto h = risk_hyper(grid, v, market.graph.groups);
            const auto model = models::fit_risk_model(market.split.train, market.graph, h.weights, market.assets, opts);
            return models::validation_nll(model, market.split.validation, opts.unit_scale);
        };
        out.push_back(tune::grid_search(grid, eval, tune::Direction::minimize, jobs, config.tolerance));
    }
    return out;
}

fit::StratumDataset training_data(const Market& market, bool all) {
    return all ? market.split.train.merged(market.split.validation) : market.split.train;
}

models::MeanModel fit_return(const Market& market, const RunConfig& config, const ReturnHyper& hyper, bool all) {
    return models::fit_return_model(training_data(market, all), market.graph, hyper.local, hyper.weights,
                                    market.assets, config.huber_m, config.fit);
}

models::PrecisionModel fit_risk(const Market& market, const RunConfig& config, const RiskHyper& hyper, bool all) {
    return models::fit_risk_model(training_data(market, all), market.graph, hyper.weights, market.assets, config.fit);
}

models::MeanModel fit_common_return(const Market& market, bool all) {
    return models::common_return_model(training_data(market, all), market.assets);
}

models::PrecisionModel fit_common_risk(const Market& market, const RunConfig& config, bool all) {
    return models::common_risk_model(training_data(market, all), market.assets, 1, config.fit.unit_scale);
}

policy::PolicyParams policy_params(const RunConfig& config, std::size_t assets, const PolicyGammas& gammas) {
    auto p = policy::default_params(assets);
    p.gamma_sc = gammas.gamma_sc;
    p.gamma_tc = gammas.gamma_tc;
    p.kappa = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(assets), config.kappa);
    p.sigma = config.sigma;
    p.leverage = config.leverage;
    p.w_min = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(assets), config.w_min);
    p.w_max = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(assets), config.w_max);
    p.validate(assets);
    return p;
}

double policy_score(const Market& market, const RunConfig& config, const models::MeanModel& mean,
                    const models::PrecisionModel& risk, const PolicyGammas& gammas) {
    const auto params = policy_params(config, market.backtest.assets.size(), gammas);
    const std::size_t first = std::max<std::size_t>(market.model_rows.front(), 1);
    const std::size_t last = market.model_rows.back() + 1;
    const auto result = backtest::run_backtest(market.backtest, first, last, mean, risk, params, "tuning", {},
                                                   config.spread_window);
    std::vector<double> net;
    net.reserve(market.split.rows.validation.size());
    for (std::size_t r : market.split.rows.validation) {
        if (r >= first && r < last) net.push_back(result.net[r - first]);
    }
    return backtest::annualized_return(net);
}

tune::TuneResult tune_policy(const Market& market, const RunConfig& config, const models::MeanModel& mean,
                             const models::PrecisionModel& risk, int jobs) {
    const auto eval = [&](const std::vector<double>& v) {
        return policy_score(market, config, mean, risk, PolicyGammas{v.at(0), v.at(1)});
    };
    return tune::grid_search(config.policy_grid, eval, tune::Direction::maximize, jobs, config.tolerance);
}

backtest::BacktestResult test_backtest(const Market& market, const RunConfig& config, const models::MeanModel& mean,
                                       const models::PrecisionModel& risk, const PolicyGammas& gammas,
                                       const std::string& label) {
    const auto params = policy_params(config, market.backtest.assets.size(), gammas);
    const std::size_t first = std::max<std::size_t>(market.test_rows.front(), 1);
    const std::size_t last = market.test_rows.back() + 1;
    return backtest::run_backtest(market.backtest, first, last, mean, risk, params, label, {}, config.spread_window);
}

}  // namespace stratport::pipeline
