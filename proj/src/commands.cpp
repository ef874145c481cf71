#include "stratport/commands.hpp"

#include <cmath>
#include <filesystem>

#include "stratport/error.hpp"
#include "stratport/pipeline.hpp"
#include "stratport/plot.hpp"
#include "stratport/random.hpp"
#include "stratport/text.hpp"

namespace stratport::commands {

namespace fs = std::filesystem;
using io::Json;
using pipeline::RunConfig;

namespace {

struct Context {
    RunConfig config;
    fs::path out;

    std::string path(const std::string& name) const { return (out / name).string(); }

    Json envelope(const std::string& kind) const {
        Json j;
        j["kind"] = kind;
        j["provenance"] = {{"config_hash", config.hash()}, {"seed", config.seed}, {"config", config.to_json()}};
        return j;
    }

    std::string comment() const { return "# " + config.provenance() + "\n"; }

    void write_json(const std::string& name, const Json& j) const { io::write_text_file(path(name), io::dump(j)); }
    void write_tsv(const std::string& name, const std::string& body) const {
        io::write_text_file(path(name), comment() + body);
    }
    void write_svg(const std::string& name, const std::string& svg) const { io::write_text_file(path(name), svg); }

    /// Reads an artifact written by an earlier step of the same config.
    Json read_artifact(const std::string& name, const std::string& producer) const {
        const auto p = path(name);
        if (!fs::exists(p)) throw InputError(p + " not found; run '" + producer + "' first");
        auto j = io::read_json_file(p);
        if (!j.contains("provenance") || j["provenance"].value("config_hash", std::string()) != config.hash()) {
            throw InputError(p + " was written under a different config; rerun '" + producer + "'");
        }
        return j;
    }
};

Context open(const Options& o) {
    if (o.config.empty()) throw InputError("--config is required");
    Context c{pipeline::load_config(o.config, o.seed), fs::path(o.out)};
    fs::create_directories(c.out);
    return c;
}

// Model files are the model document plus the provenance block.
Json with_provenance(Json model, const Context& c) {
    model["provenance"] = c.envelope("")["provenance"];
    return model;
}

std::string tsv_matrix(const std::vector<std::string>& names, const Eigen::MatrixXd& m) {
    std::string out = "indicator";
    for (const auto& n : names) out += '\t' + n;
    out += '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out += names[static_cast<std::size_t>(r)];
        for (Eigen::Index k = 0; k < m.cols(); ++k) out += '\t' + text::format_double(m(r, k));
        out += '\n';
    }
    return out;
}

Json matrix_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(r, k));
        rows.push_back(row);
    }
    return rows;
}

std::vector<std::string> date_labels(const std::vector<Date>& dates) {
    std::vector<std::string> out;
    out.reserve(dates.size());
    for (const auto& d : dates) out.push_back(d.str());
    return out;
}

Json tuning_json(const Context& c, const std::string& kind, const std::string& metric,
                 const std::vector<tune::TuneResult>& stages) {
    Json j = c.envelope(kind);
    j["metric"] = metric;
    Json list = Json::array();
    for (const auto& s : stages) list.push_back(io::to_json(s));
    j["stages"] = list;
    const auto& last = stages.back();
    const auto values = last.selected_values();
    Json sel = Json::object();
    for (std::size_t a = 0; a < last.grid.axes.size(); ++a) sel[last.grid.axes[a].name] = values[a];
    j["selected"] = sel;
    return j;
}

void write_stage_tables(const Context& c, const std::string& prefix, const std::vector<tune::TuneResult>& stages) {
    for (std::size_t s = 0; s < stages.size(); ++s) {
        std::string name = prefix + "_" + stages[s].grid.stage;
        for (std::size_t t = 0; t < s; ++t) {
            if (stages[t].grid.stage == stages[s].grid.stage) {
                name += "_" + std::to_string(s + 1);
                break;
            }
        }
        c.write_tsv(name + ".tsv", tune::to_tsv(stages[s]));
    }
}

double selected(const Json& sel, const std::string& key, const std::string& file) {
    if (!sel.contains(key)) throw InputError(file + " has no selected value for '" + key + "'");
    return sel.at(key).get<double>();
}

pipeline::ReturnHyper return_hyper(const Context& c, const pipeline::Market& m) {
    if (c.config.fixed_return) return *c.config.fixed_return;
    const auto j = c.read_artifact("tune_return.json", "tune-return");
    pipeline::ReturnHyper h;
    h.local = selected(j.at("selected"), "local", "tune_return.json");
    for (const auto& g : m.graph.groups) h.weights.push_back(selected(j.at("selected"), g, "tune_return.json"));
    return h;
}

pipeline::RiskHyper risk_hyper(const Context& c, const pipeline::Market& m) {
    if (c.config.fixed_risk) return *c.config.fixed_risk;
    const auto j = c.read_artifact("tune_risk.json", "tune-risk");
    pipeline::RiskHyper h;
    for (const auto& g : m.graph.groups) h.weights.push_back(selected(j.at("selected"), g, "tune_risk.json"));
    return h;
}

std::string suffix(bool all) { return all ? "_all" : ""; }

std::pair<models::MeanModel, models::PrecisionModel> load_models(const Context& c, bool common, bool all) {
    const std::string pre = common ? "common_" : "";
    const std::string producer_r = std::string("fit-return") + (all ? " --refit-all" : "");
    const std::string producer_s = std::string("fit-risk") + (all ? " --refit-all" : "");
    auto mean = io::mean_model_from_json(c.read_artifact(pre + "return_model" + suffix(all) + ".json", producer_r));
    auto risk = io::precision_model_from_json(c.read_artifact(pre + "risk_model" + suffix(all) + ".json", producer_s));
    return {std::move(mean), std::move(risk)};
}

std::string reference_asset(const RunConfig& config, const std::vector<std::string>& assets) {
    for (const auto& a : assets) {
        if (a == config.correlation_reference) return a;
    }
    return assets.front();
}

Json report_json(const backtest::PerformanceReport& r) {
    Json j;
    j["days"] = r.days;
    j["annual_return"] = r.annual_return;
    j["annual_risk"] = r.annual_risk;
    j["sharpe"] = r.sharpe ? Json(*r.sharpe) : Json(nullptr);
    j["max_drawdown"] = r.max_drawdown;
    return j;
}

std::optional<backtest::FactorRegression> factor_attribution(const Context& c, const backtest::BacktestResult& b) {
    if (c.config.inputs.factors.empty()) return std::nullopt;
    const auto f = data::read_csv_file(c.config.resolve(c.config.inputs.factors));
    const std::vector<std::string> names{"MKTRF", "SMB", "HML", "UMD"};
    std::vector<Eigen::Index> cols;
    for (const auto& n : names) cols.push_back(static_cast<Eigen::Index>(f.column(n)));
    std::vector<double> y;
    std::vector<Eigen::Index> rows;
    std::size_t k = 0;
    for (std::size_t t = 0; t < b.days(); ++t) {
        while (k < f.rows() && f.dates[k] < b.dates[t]) ++k;
        if (k < f.rows() && f.dates[k] == b.dates[t]) {
            y.push_back(b.net[t]);
            rows.push_back(static_cast<Eigen::Index>(k));
        }
    }
    const Eigen::MatrixXd x = f.values(rows, cols);
    return backtest::factor_regression(y, x, names);
}

}  // namespace

void ingest(const Options& o) {
    const auto c = open(o);
    const auto m = pipeline::load_market(c.config);
    const auto diag = data::indicator_diagnostics(m.records.indicators, c.config.model);
    io::write_text_file(c.path("records_returns.csv"), c.comment() + data::to_csv(m.records.returns));
    io::write_text_file(c.path("records_spreads.csv"), c.comment() + data::to_csv(m.records.spreads));
    io::write_text_file(c.path("records_indicators.csv"), c.comment() + data::to_csv(m.records.indicators));
    c.write_tsv("indicator_correlations.tsv", tsv_matrix(m.records.indicators.columns, diag));
    Json j = c.envelope("ingest");
    Json logs = Json::array();
    for (const auto& l : m.logs) {
        logs.push_back({{"source", l.source}, {"rows_read", l.rows_read}, {"rows_dropped", l.rows_dropped}});
    }
    j["inputs"] = logs;
    j["records"] = m.records.returns.rows();
    j["first_record"] = m.records.returns.dates.front().str();
    j["last_record"] = m.records.returns.dates.back().str();
    j["benchmark"] = c.config.benchmark;
    j["assets"] = m.assets;
    j["model_records"] = m.model_rows.size();
    j["test_records"] = m.test_rows.size();
    j["train_records"] = m.split.rows.train.size();
    j["validation_records"] = m.split.rows.validation.size();
    j["indicators"] = m.records.indicators.columns;
    j["indicator_correlations"] = matrix_json(diag);
    c.write_json("ingest.json", j);
}

void bin(const Options& o) {
    const auto c = open(o);
    const auto m = pipeline::load_market(c.config);
    c.write_json("bins.json", with_provenance(io::to_json(m.bins), c));
    c.write_json("graph.json", with_provenance(io::to_json(m.graph), c));
    c.write_tsv("graph.edges", io::edge_list(m.graph));

    data::Panel z;
    z.dates = m.records.indicators.dates;
    z.columns = {"condition"};
    for (const auto& n : m.bins.names) z.columns.push_back(n);
    z.values.resize(static_cast<Eigen::Index>(z.dates.size()), static_cast<Eigen::Index>(z.columns.size()));
    for (std::size_t t = 0; t < m.conditions.size(); ++t) {
        const auto r = static_cast<Eigen::Index>(t);
        z.values(r, 0) = static_cast<double>(m.conditions[t].index);
        for (std::size_t k = 0; k < m.conditions[t].levels.size(); ++k) {
            z.values(r, static_cast<Eigen::Index>(k + 1)) = m.conditions[t].levels[k];
        }
    }
    io::write_text_file(c.path("conditions.csv"), c.comment() + data::to_csv(z));

    std::vector<graph::MarketCondition> model_z;
    for (std::size_t r : m.model_rows) model_z.push_back(m.conditions[r]);
    Json j = c.envelope("bin");
    j["strata"] = m.strata();
    j["edges"] = m.graph.edges.size();
    j["levels"] = m.bins.levels;
    j["populated_model_strata"] = m.populated_strata();
    j["mean_condition_step_model"] = data::mean_condition_step(model_z);
    j["mean_condition_step_all"] = data::mean_condition_step(m.conditions);
    c.write_json("bin.json", j);

    std::vector<plot::Series> series;
    for (std::size_t k = 0; k < m.bins.names.size(); ++k) {
        plot::Series s{m.bins.names[k], {}};
        for (const auto& zt : m.conditions) s.values.push_back(zt.levels[k]);
        series.push_back(std::move(s));
    }
    c.write_svg("conditions.svg", plot::line_chart("Market condition levels", series, date_labels(z.dates),
                                                   c.config.provenance()));
}

void tune_return(const Options& o) {
    const auto c = open(o);
    const auto m = pipeline::load_market(c.config);
    const auto stages = pipeline::tune_return(m, c.config, o.jobs);
    write_stage_tables(c, "tune_return", stages);
    c.write_json("tune_return.json", tuning_json(c, "tune-return", "validation correlation", stages));
}

void tune_risk(const Options& o) {
    const auto c = open(o);
    const auto m = pipeline::load_market(c.config);
    const auto stages = pipeline::tune_risk(m, c.config, o.jobs);
    write_stage_tables(c, "tune_risk", stages);
    c.write_json("tune_risk.json", tuning_json(c, "tune-risk", "validation negative log-likelihood", stages));
}

void fit_return(const Options& o) {
    const auto c = open(o);
    const auto m = pipeline::load_market(c.config);
    const auto h = return_hyper(c, m);
    const bool all = o.refit_all;
    const auto model = pipeline::fit_return(m, c.config, h, all);
    const auto common = pipeline::fit_common_return(m, all);
    c.write_json("return_model" + suffix(all) + ".json", with_provenance(io::to_json(model), c));
    c.write_json("common_return_model" + suffix(all) + ".json", with_provenance(io::to_json(common), c));
    c.write_tsv("return_summary" + suffix(all) + ".tsv", models::to_tsv(models::return_summary(model, common)));
    c.write_tsv("return_graph" + suffix(all) + ".edges", io::edge_list(m.graph, h.weights));

    Json j = c.envelope("fit-return");
    j["training"] = all ? "train+validation" : "train";
    j["local_weight"] = h.local;
    j["laplacian_weights"] = h.weights;
    j["converged"] = model.info.converged;
    j["iterations"] = model.info.iterations;
    j["objective"] = model.info.objective;
    const auto train = pipeline::training_data(m, all);
    j["train_correlation"] = {{"stratified", models::validation_correlation(model, train)},
                              {"common", models::validation_correlation(common, train)}};
    if (!all) {
        j["validation_correlation"] = {{"stratified", models::validation_correlation(model, m.split.validation)},
                                       {"common", models::validation_correlation(common, m.split.validation)}};
    }
    c.write_json("fit_return" + suffix(all) + ".json", j);
}

void fit_risk(const Options& o) {
    const auto c = open(o);
    const auto m = pipeline::load_market(c.config);
    const auto h = risk_hyper(c, m);
    const bool all = o.refit_all;
    const auto model = pipeline::fit_risk(m, c.config, h, all);
    const auto common = pipeline::fit_common_risk(m, c.config, all);
    c.write_json("risk_model" + suffix(all) + ".json", with_provenance(io::to_json(model), c));
    c.write_json("common_risk_model" + suffix(all) + ".json", with_provenance(io::to_json(common), c));
    c.write_tsv("volatility_summary" + suffix(all) + ".tsv",
                models::to_tsv(models::volatility_summary(model, common)));
    c.write_tsv("correlation_summary" + suffix(all) + ".tsv",
                models::to_tsv(models::correlation_summary(model, common, reference_asset(c.config, m.assets))));
    c.write_tsv("risk_graph" + suffix(all) + ".edges", io::edge_list(m.graph, h.weights));

    const double scale = c.config.fit.unit_scale;
    Json j = c.envelope("fit-risk");
    j["training"] = all ? "train+validation" : "train";
    j["laplacian_weights"] = h.weights;
    j["converged"] = model.info.converged;
    j["iterations"] = model.info.iterations;
    j["objective"] = model.info.objective;
    j["unit_scale"] = scale;
    const auto train = pipeline::training_data(m, all);
    j["train_nll"] = {{"stratified", models::validation_nll(model, train, scale)},
                      {"common", models::validation_nll(common, train, scale)}};
    if (!all) {
        j["validation_nll"] = {{"stratified", models::validation_nll(model, m.split.validation, scale)},
                               {"common", models::validation_nll(common, m.split.validation, scale)}};
    }
    c.write_json("fit_risk" + suffix(all) + ".json", j);
}

void tune_policy(const Options& o) {
    const auto c = open(o);
    const auto m = pipeline::load_market(c.config);
    const auto [mean, risk] = load_models(c, o.common, false);
    const auto result = pipeline::tune_policy(m, c.config, mean, risk, o.jobs);
    const std::string name = o.common ? "tune_policy_common" : "tune_policy";
    c.write_tsv(name + ".tsv", tune::to_tsv(result));
    c.write_json(name + ".json",
                 tuning_json(c, "tune-policy", "annualized validation return", std::vector<tune::TuneResult>{result}));

    const auto& gx = result.grid.axes[0].values;
    const auto& gy = result.grid.axes[1].values;
    Eigen::MatrixXd scores(static_cast<Eigen::Index>(gx.size()), static_cast<Eigen::Index>(gy.size()));
    for (std::size_t i = 0; i < gx.size(); ++i) {
        for (std::size_t k = 0; k < gy.size(); ++k) {
            scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = result.scores[i * gy.size() + k];
        }
    }
    const auto sx = static_cast<int>(result.selected / gy.size());
    const auto sy = static_cast<int>(result.selected % gy.size());
    c.write_svg(name + ".svg",
                plot::heatmap(std::string("Validation annualized return") + (o.common ? " (common)" : ""),
                              result.grid.axes[0].name, gx, result.grid.axes[1].name, gy, scores, sx, sy,
                              c.config.provenance()));
}

void backtest(const Options& o) {
    const auto c = open(o);
    const auto m = pipeline::load_market(c.config);
    const auto [mean, risk] = load_models(c, o.common, true);
    pipeline::PolicyGammas g;
    if (c.config.fixed_policy) {
        g = *c.config.fixed_policy;
    } else {
        const std::string file = o.common ? "tune_policy_common.json" : "tune_policy.json";
        const auto j = c.read_artifact(file, o.common ? "tune-policy --baseline common" : "tune-policy");
        g.gamma_sc = selected(j.at("selected"), "gamma_sc", file);
        g.gamma_tc = selected(j.at("selected"), "gamma_tc", file);
    }
    const std::string label = o.common ? "common" : "stratified";
    const auto result = pipeline::test_backtest(m, c.config, mean, risk, g, label);
    const auto report = backtest::performance_metrics(result);
    const auto regression = factor_attribution(c, result);

    const std::string name = o.common ? "backtest_common" : "backtest";
    c.write_tsv(name + "_ledger.tsv", backtest::ledger_tsv(result));
    std::string text = backtest::report_text(report);
    text += "gamma_sc\t" + text::format_double(g.gamma_sc) + "\ngamma_tc\t" + text::format_double(g.gamma_tc) + "\n";
    text += "held_days\t" + std::to_string(result.held_days()) + "\n";
    c.write_tsv(name + "_report.txt", text);

    Json j = c.envelope("backtest");
    j["label"] = label;
    j["gamma_sc"] = g.gamma_sc;
    j["gamma_tc"] = g.gamma_tc;
    j["first_day"] = result.dates.front().str();
    j["last_day"] = result.dates.back().str();
    j["performance"] = report_json(report);
    j["held_days"] = result.held_days();
    Eigen::VectorXd start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(result.assets.size()));
    start(static_cast<Eigen::Index>(m.backtest.benchmark)) = 1.0;
    j["turnover"] = result.turnover(start);
    j["final_value"] = result.value.back();
    if (regression) {
        Json r;
        r["factors"] = regression->factors;
        Json coef = Json::object();
        for (std::size_t k = 0; k < regression->factors.size(); ++k) {
            coef[regression->factors[k]] = regression->coefficients(static_cast<Eigen::Index>(k));
        }
        r["coefficients"] = coef;
        r["alpha"] = regression->alpha;
        r["annual_alpha"] = regression->annual_alpha;
        r["r_squared"] = regression->r_squared;
        r["observations"] = regression->observations;
        j["factor_regression"] = r;
    }
    c.write_json(name + ".json", j);

    const auto labels = date_labels(result.dates);
    c.write_svg(name + "_value.svg",
                plot::line_chart("Portfolio value (" + label + ")",
                                 {{label, result.value},
                                  {"benchmark", std::vector<double>(result.value.size(), 1.0)}},
                                 labels, c.config.provenance()));
    c.write_svg(name + "_holdings.svg",
                plot::stacked_area("Holdings (" + label + ")", result.weights, result.assets, labels,
                                   c.config.provenance()));
}

void synth(const Options& o, const SynthSpec& spec) {
    if (spec.levels < 2 || spec.assets == 0 || spec.model_days < 10 || spec.test_days < 10) {
        throw InputError("synth needs levels >= 2, at least one asset and at least 10 model and test days");
    }
    const std::uint64_t seed = o.seed.value_or(0);
    const fs::path out(o.out);
    fs::create_directories(out);
    const auto truth = data::regime_ground_truth({spec.levels, spec.levels, spec.levels}, spec.assets, seed);
    data::SynthOptions so;
    so.days = spec.model_days + spec.test_days + 1;  // the first day only feeds the lagged condition
    so.seed = seed;
    const auto market = data::synth_generate(truth, so);
    const auto& d = market.returns.dates;

    RunConfig cfg;
    cfg.inputs = {"returns.csv", "spreads.csv", "indicators.csv", "factors.csv"};
    cfg.benchmark = so.benchmark;
    cfg.groups = {"vol", "inf", "mort"};
    cfg.model = {d[1], d[spec.model_days]};
    cfg.test = {d[spec.model_days + 1], d[spec.model_days + spec.test_days]};
    cfg.seed = seed;
    cfg.levels = spec.levels;
    cfg.return_grids = {tune::presets::return_coarse()};
    cfg.risk_grids = {tune::presets::risk_coarse()};
    if (spec.fine_grids) {
        cfg.return_grids.push_back(tune::presets::return_fine());
        cfg.risk_grids.push_back(tune::presets::risk_fine());
    }
    cfg.policy_grid = tune::presets::policy(spec.policy_count, 0.1, 10.0);
    cfg.correlation_reference = truth.assets.front();
    cfg.validate();
    const std::string comment = "# " + cfg.provenance() + "\n";

    // factor returns unrelated to the assets, so only the plumbing is exercised
    data::Panel factors;
    factors.dates = d;
    factors.columns = {"MKTRF", "SMB", "HML", "UMD"};
    factors.values.resize(static_cast<Eigen::Index>(d.size()), 4);
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    const double scale[4] = {0.01, 0.005, 0.005, 0.007};
    for (Eigen::Index t = 0; t < factors.values.rows(); ++t) {
        for (Eigen::Index k = 0; k < 4; ++k) factors.values(t, k) = scale[k] * rng.normal();
    }

    io::write_text_file((out / "returns.csv").string(), comment + data::to_csv(market.returns));
    io::write_text_file((out / "spreads.csv").string(), comment + data::to_csv(market.spreads));
    io::write_text_file((out / "indicators.csv").string(), comment + data::to_csv(market.indicators));
    io::write_text_file((out / "factors.csv").string(), comment + data::to_csv(factors));
    Json truth_json = io::to_json(truth);
    truth_json["provenance"] = {{"config_hash", cfg.hash()}, {"seed", seed}};
    io::write_text_file((out / "truth.json").string(), io::dump(truth_json));
    io::write_text_file((out / "config.json").string(), io::dump(cfg.to_json()));
}

void run_all(const Options& o) {
    Options s = o;
    s.common = false;
    s.refit_all = false;
    ingest(s);
    bin(s);
    if (!pipeline::load_config(o.config, o.seed).fixed_return) tune_return(s);
    if (!pipeline::load_config(o.config, o.seed).fixed_risk) tune_risk(s);
    for (bool all : {false, true}) {
        s.refit_all = all;
        fit_return(s);
        fit_risk(s);
    }
    s.refit_all = false;
    for (bool common : {false, true}) {
        s.common = common;
        tune_policy(s);
        backtest(s);
    }
}

}  // namespace stratport::commands
