#include "stratport/serialize.hpp"

#include <fstream>
#include <sstream>

#include "stratport/error.hpp"
#include "stratport/text.hpp"

namespace stratport::io {

namespace {

template <typename T>
T get(const Json& j, const char* key) {
    if (!j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad field '") + key + "': " + e.what());
    }
}

Json row_of(const Eigen::Ref<const Eigen::RowVectorXd>& r) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < r.size(); ++i) a.push_back(r(i));
    return a;
}

}  // namespace

Json to_json(const graph::DecileBins& bins) {
    Json j;
    j["names"] = bins.names;
    j["boundaries"] = bins.boundaries;
    j["fit_range"] = {bins.fit_range.first.str(), bins.fit_range.last.str()};
    j["levels"] = bins.levels;
    return j;
}

graph::DecileBins bins_from_json(const Json& j) {
    graph::DecileBins b;
    b.names = get<std::vector<std::string>>(j, "names");
    b.boundaries = get<std::vector<std::vector<double>>>(j, "boundaries");
    const auto range = get<std::vector<std::string>>(j, "fit_range");
    if (range.size() != 2) throw InputError("fit_range must have two dates");
    b.fit_range = {Date::parse(range[0]), Date::parse(range[1])};
    b.levels = get<int>(j, "levels");
    b.validate();
    return b;
}

Json to_json(const graph::RegularizationGraph& graph, const std::vector<double>& weights) {
    Json j;
    j["nodes"] = graph.nodes;
    j["dims"] = graph.shape.dims();
    j["groups"] = graph.groups;
    if (!weights.empty()) j["weights"] = weights;
    Json edges = Json::array();
    for (const auto& e : graph.edges) edges.push_back({e.u + 1, e.v + 1, e.group});
    j["edges"] = edges;
    return j;
}

graph::RegularizationGraph graph_from_json(const Json& j) {
    const auto dims = get<std::vector<int>>(j, "dims");
    auto g = graph::build_product_chain_graph(dims, get<std::vector<std::string>>(j, "groups"));
    if (g.nodes != get<std::size_t>(j, "nodes") || g.edges.size() != j.at("edges").size()) {
        throw InputError("graph file does not describe a product chain graph of its dims");
    }
    return g;
}

std::string edge_list(const graph::RegularizationGraph& graph, const std::vector<double>& weights) {
    std::string out;
    if (!weights.empty() && weights.size() != graph.groups.size()) {
        throw InputError("edge list needs one weight per group");
    }
    for (const auto& e : graph.edges) {
        out += std::to_string(e.u + 1) + ' ' + std::to_string(e.v + 1) + ' ' + graph.groups[e.group];
        if (!weights.empty()) out += ' ' + text::format_double(weights[e.group]);
        out += '\n';
    }
    return out;
}

Json to_json(const models::ModelInfo& info) {
    Json j;
    j["dims"] = info.dims;
    j["groups"] = info.group_names;
    j["local_weight"] = info.local_weight;
    j["laplacian_weights"] = info.laplacian_weights;
    j["huber_m"] = info.huber_m;
    j["unit_scale"] = info.unit_scale;
    j["common"] = info.common;
    j["converged"] = info.converged;
    j["iterations"] = info.iterations;
    j["objective"] = info.objective;
    return j;
}

models::ModelInfo info_from_json(const Json& j) {
    models::ModelInfo i;
    i.dims = get<std::vector<int>>(j, "dims");
    i.group_names = get<std::vector<std::string>>(j, "groups");
    i.local_weight = get<double>(j, "local_weight");
    i.laplacian_weights = get<std::vector<double>>(j, "laplacian_weights");
    i.huber_m = get<double>(j, "huber_m");
    i.unit_scale = get<double>(j, "unit_scale");
    i.common = get<bool>(j, "common");
    i.converged = get<bool>(j, "converged");
    i.iterations = get<int>(j, "iterations");
    i.objective = get<double>(j, "objective");
    return i;
}

Json to_json(const models::MeanModel& model) {
    Json j;
    j["kind"] = "mean";
    j["strata"] = model.strata();
    j["assets"] = model.assets;
    j["info"] = to_json(model.info);
    Json rows = Json::array();
    for (Eigen::Index k = 0; k < model.mu.rows(); ++k) rows.push_back(row_of(model.mu.row(k)));
    j["mu"] = rows;
    return j;
}

models::MeanModel mean_model_from_json(const Json& j) {
    if (get<std::string>(j, "kind") != "mean") throw InputError("not a mean model file");
    models::MeanModel m;
    m.assets = get<std::vector<std::string>>(j, "assets");
    m.info = info_from_json(j.at("info"));
    const auto rows = get<std::vector<std::vector<double>>>(j, "mu");
    if (rows.size() != get<std::size_t>(j, "strata")) throw InputError("mean model row count differs from strata");
    const auto n = static_cast<Eigen::Index>(m.assets.size());
    m.mu.resize(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (static_cast<Eigen::Index>(rows[k].size()) != n) throw InputError("mean model row has the wrong length");
        for (Eigen::Index i = 0; i < n; ++i) m.mu(static_cast<Eigen::Index>(k), i) = rows[k][static_cast<std::size_t>(i)];
    }
    m.validate();
    return m;
}

Json to_json(const models::PrecisionModel& model) {
    Json j;
    j["kind"] = "precision";
    j["strata"] = model.strata();
    j["assets"] = model.assets;
    j["info"] = to_json(model.info);
    Json blocks = Json::array();
    for (const auto& t : model.theta) {
        Json packed = Json::array();
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            for (Eigen::Index c = r; c < t.cols(); ++c) packed.push_back(t(r, c));
        }
        blocks.push_back(packed);
    }
    j["theta_packed"] = blocks;
    return j;
}

models::PrecisionModel precision_model_from_json(const Json& j) {
    if (get<std::string>(j, "kind") != "precision") throw InputError("not a precision model file");
    models::PrecisionModel m;
    m.assets = get<std::vector<std::string>>(j, "assets");
    m.info = info_from_json(j.at("info"));
    const auto blocks = get<std::vector<std::vector<double>>>(j, "theta_packed");
    if (blocks.size() != get<std::size_t>(j, "strata")) throw InputError("precision model block count differs from strata");
    const auto n = static_cast<Eigen::Index>(m.assets.size());
    for (const auto& b : blocks) {
        if (static_cast<Eigen::Index>(b.size()) != n * (n + 1) / 2) throw InputError("packed block has the wrong length");
        Eigen::MatrixXd t(n, n);
        std::size_t p = 0;
        for (Eigen::Index r = 0; r < n; ++r) {
            for (Eigen::Index c = r; c < n; ++c) {
                t(r, c) = b[p];
                t(c, r) = b[p];
                ++p;
            }
        }
        m.theta.push_back(std::move(t));
    }
    m.validate();
    return m;
}

Json to_json(const tune::Grid& grid) {
    Json j;
    j["stage"] = grid.stage;
    Json axes = Json::array();
    for (const auto& a : grid.axes) {
        axes.push_back({{"name", a.name}, {"values", a.values}, {"regularization", a.regularization}});
    }
    j["axes"] = axes;
    return j;
}

tune::Grid grid_from_json(const Json& j) {
    tune::Grid g;
    g.stage = j.value("stage", std::string("coarse"));
    if (!j.contains("axes") || !j.at("axes").is_array()) throw InputError("grid needs an 'axes' array");
    for (const auto& a : j.at("axes")) {
        tune::Axis axis;
        axis.name = get<std::string>(a, "name");
        axis.values = get<std::vector<double>>(a, "values");
        axis.regularization = a.value("regularization", true);
        g.axes.push_back(std::move(axis));
    }
    g.validate();
    return g;
}

Json to_json(const tune::TuneResult& result) {
    Json j;
    j["grid"] = to_json(result.grid);
    j["direction"] = result.direction == tune::Direction::maximize ? "maximize" : "minimize";
    j["tolerance"] = result.tolerance;
    j["combinations"] = result.scores.size();
    std::size_t failed = 0;
    for (const auto& e : result.errors) failed += e.empty() ? 0 : 1;
    j["failed"] = failed;
    const auto best = result.grid.combination(result.best);
    const auto sel = result.grid.combination(result.selected);
    Json bj, sj;
    for (std::size_t a = 0; a < result.grid.axes.size(); ++a) {
        bj[result.grid.axes[a].name] = best[a];
        sj[result.grid.axes[a].name] = sel[a];
    }
    j["best"] = {{"index", result.best}, {"values", bj}, {"score", result.scores[result.best]}};
    j["selected"] = {{"index", result.selected}, {"values", sj}, {"score", result.scores[result.selected]}};
    j["rationale"] = result.rationale;
    return j;
}

Json to_json(const data::GroundTruth& truth) {
    Json j;
    j["dims"] = truth.dims;
    j["assets"] = truth.assets;
    Json mu = Json::array();
    Json sigma = Json::array();
    for (std::size_t k = 0; k < truth.mu.size(); ++k) {
        mu.push_back(row_of(truth.mu[k].transpose()));
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < truth.sigma[k].rows(); ++r) rows.push_back(row_of(truth.sigma[k].row(r)));
        sigma.push_back(rows);
    }
    j["mu"] = mu;
    j["sigma"] = sigma;
    return j;
}

data::GroundTruth ground_truth_from_json(const Json& j) {
    data::GroundTruth g;
    g.dims = get<std::vector<int>>(j, "dims");
    g.assets = get<std::vector<std::string>>(j, "assets");
    for (const auto& m : get<std::vector<std::vector<double>>>(j, "mu")) {
        g.mu.push_back(Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size())));
    }
    for (const auto& s : get<std::vector<std::vector<std::vector<double>>>>(j, "sigma")) {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(s.size()));
        for (std::size_t r = 0; r < s.size(); ++r) {
            if (s[r].size() != s.size()) throw InputError("ground-truth covariance is not square");
            for (std::size_t c = 0; c < s.size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = s[r][c];
        }
        g.sigma.push_back(std::move(m));
    }
    g.validate();
    return g;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return Json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << text;
    if (!out) throw InputError("write failed for " + path);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace stratport::io
