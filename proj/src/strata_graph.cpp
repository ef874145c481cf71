#include "stratport/strata_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stratport/error.hpp"

namespace stratport::graph {

void DecileBins::validate() const {
    if (levels < 2) throw InputError("bins need at least 2 levels");
    if (names.size() != boundaries.size()) {
        throw InputError("bins: indicator names and boundary lists differ in length");
    }
    for (std::size_t j = 0; j < boundaries.size(); ++j) {
        const auto& b = boundaries[j];
        if (b.size() != static_cast<std::size_t>(levels - 1)) {
            throw InputError("bins: indicator '" + names[j] + "' has " + std::to_string(b.size()) +
                             " boundaries, expected " + std::to_string(levels - 1));
        }
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (!std::isfinite(b[i]) || (i > 0 && !(b[i - 1] < b[i]))) {
                throw InputError("bins: boundaries of '" + names[j] +
                                 "' are not finite and strictly increasing");
            }
        }
    }
}

double quantile_sorted(std::span<const double> sorted, double p) {
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> quantile_boundaries(std::span<const double> values, int levels) {
    if (levels < 2) throw InputError("quantile binning needs at least 2 levels");
    std::vector<double> sorted(values.begin(), values.end());
    for (double v : sorted) {
        if (!std::isfinite(v)) throw InputError("non-finite value in indicator series");
    }
    std::sort(sorted.begin(), sorted.end());
    std::size_t n_distinct = sorted.empty() ? 0 : 1;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i] != sorted[i - 1]) ++n_distinct;
    }
    if (n_distinct < static_cast<std::size_t>(levels)) {
        throw DegenerateBinsError("series has " + std::to_string(n_distinct) +
                                  " distinct values; " + std::to_string(levels) +
                                  " are needed for quantile bins");
    }
    std::vector<double> out(static_cast<std::size_t>(levels - 1));
    for (int i = 1; i < levels; ++i) {
        out[static_cast<std::size_t>(i - 1)] =
            quantile_sorted(sorted, static_cast<double>(i) / static_cast<double>(levels));
    }
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (!(out[i - 1] < out[i])) {
            throw DegenerateBinsError("quantile boundaries collapse (ties in the data)");
        }
    }
    return out;
}

std::vector<double> compute_decile_bins(std::span<const Date> dates, std::span<const double> values,
                                        const DateRange& fit_range, int levels) {
    if (dates.size() != values.size()) throw InputError("dates and values differ in length");
    std::vector<double> in_range;
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (fit_range.contains(dates[i])) in_range.push_back(values[i]);
    }
    return quantile_boundaries(in_range, levels);
}

GridShape::GridShape(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw InputError("grid needs at least one dimension");
    strides_.assign(dims_.size(), 1);
    size_ = 1;
    for (std::size_t j = dims_.size(); j-- > 0;) {
        if (dims_[j] < 1) throw InputError("grid dimensions must be >= 1");
        strides_[j] = size_;
        size_ *= static_cast<std::size_t>(dims_[j]);
    }
}

std::size_t GridShape::flat_index(std::span<const int> levels) const {
    if (levels.size() != dims_.size()) {
        throw InputError("condition has " + std::to_string(levels.size()) + " coordinates, grid has " +
                         std::to_string(dims_.size()));
    }
    std::size_t idx = 0;
    for (std::size_t j = 0; j < dims_.size(); ++j) {
        if (levels[j] < 1 || levels[j] > dims_[j]) {
            throw InputError("condition level " + std::to_string(levels[j]) + " outside 1.." +
                             std::to_string(dims_[j]));
        }
        idx += static_cast<std::size_t>(levels[j] - 1) * strides_[j];
    }
    return idx + 1;
}

std::vector<int> GridShape::levels(std::size_t flat) const {
    if (flat < 1 || flat > size_) {
        throw InputError("flat index " + std::to_string(flat) + " outside 1.." + std::to_string(size_));
    }
    std::size_t rem = flat - 1;
    std::vector<int> out(dims_.size());
    for (std::size_t j = 0; j < dims_.size(); ++j) {
        out[j] = static_cast<int>(rem / strides_[j]) + 1;
        rem %= strides_[j];
    }
    return out;
}

MarketCondition make_condition(const GridShape& shape, std::span<const int> levels) {
    MarketCondition c;
    c.index = shape.flat_index(levels);
    c.levels.assign(levels.begin(), levels.end());
    return c;
}

MarketCondition make_condition(const GridShape& shape, std::size_t flat) {
    MarketCondition c;
    c.levels = shape.levels(flat);
    c.index = flat;
    return c;
}

int assign_level(double value, std::span<const double> boundaries) {
    if (!std::isfinite(value)) throw InputError("non-finite indicator value");
    const auto below = std::lower_bound(boundaries.begin(), boundaries.end(), value);
    return static_cast<int>(below - boundaries.begin()) + 1;
}

GridShape shape_of(const DecileBins& bins) {
    return GridShape(std::vector<int>(bins.indicators(), bins.levels));
}

MarketCondition assign_condition(std::span<const double> values, const DecileBins& bins) {
    if (values.size() != bins.indicators()) {
        throw InputError("expected " + std::to_string(bins.indicators()) + " indicator values");
    }
    std::vector<int> levels(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) {
        levels[j] = assign_level(values[j], bins.boundaries[j]);
    }
    return make_condition(shape_of(bins), levels);
}

std::vector<Edge> RegularizationGraph::active_edges(std::span<const double> weights) const {
    std::vector<Edge> out;
    for (const auto& e : edges) {
        if (weights[e.group] > 0.0) out.push_back(e);
    }
    return out;
}

RegularizationGraph build_product_chain_graph(const std::vector<int>& dims,
                                              std::vector<std::string> group_names) {
    if (dims.empty()) throw InputError("product chain graph needs at least one chain");
    GridShape shape(dims);
    if (group_names.empty()) {
        static const char* defaults[] = {"vol", "inf", "mort"};
        for (std::size_t j = 0; j < dims.size(); ++j) {
            group_names.push_back(j < 3 ? defaults[j] : "axis" + std::to_string(j));
        }
    }
    if (group_names.size() != dims.size()) {
        throw InputError("one group tag per chain is required");
    }
    RegularizationGraph g;
    g.nodes = shape.size();
    g.groups = std::move(group_names);
    for (std::size_t flat = 1; flat <= shape.size(); ++flat) {
        auto lv = shape.levels(flat);
        for (std::size_t j = 0; j < dims.size(); ++j) {
            if (lv[j] < dims[j]) {
                ++lv[j];
                g.edges.push_back({flat - 1, shape.flat_index(lv) - 1, j});
                --lv[j];
            }
        }
    }
    g.shape = std::move(shape);
    return g;
}

Eigen::SparseMatrix<double> weighted_laplacian(const RegularizationGraph& graph,
                                               std::span<const double> weights) {
    if (weights.size() != graph.groups.size()) {
        throw InputError("expected " + std::to_string(graph.groups.size()) + " edge-group weights");
    }
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("edge weights must be finite and >= 0");
    }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(4 * graph.edges.size());
    for (const auto& e : graph.edges) {
        const double w = weights[e.group];
        if (w == 0.0) continue;
        trip.emplace_back(e.u, e.v, -w);
        trip.emplace_back(e.v, e.u, -w);
        trip.emplace_back(e.u, e.u, w);
        trip.emplace_back(e.v, e.v, w);
    }
    const auto n = static_cast<Eigen::Index>(graph.nodes);
    Eigen::SparseMatrix<double> L(n, n);
    L.setFromTriplets(trip.begin(), trip.end());
    L.makeCompressed();
    return L;
}

double laplacian_penalty(const RegularizationGraph& graph, std::span<const double> weights,
                         const Eigen::MatrixXd& theta) {
    double total = 0.0;
    for (const auto& e : graph.edges) {
        const double w = weights[e.group];
        if (w == 0.0) continue;
        total += w * (theta.row(static_cast<Eigen::Index>(e.u)) -
                      theta.row(static_cast<Eigen::Index>(e.v)))
                         .squaredNorm();
    }
    return total;
}

std::vector<std::size_t> connected_components(const RegularizationGraph& graph,
                                              std::span<const double> weights) {
    std::vector<std::size_t> parent(graph.nodes);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (const auto& e : graph.edges) {
        if (weights[e.group] > 0.0) {
            const auto a = find(e.u), b = find(e.v);
            if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
    }
    std::vector<std::size_t> id(graph.nodes);
    std::vector<std::size_t> label(graph.nodes, graph.nodes);
    std::size_t next = 0;
    for (std::size_t i = 0; i < graph.nodes; ++i) {
        const auto r = find(i);
        if (label[r] == graph.nodes) label[r] = next++;
        id[i] = label[r];
    }
    return id;
}

}  // namespace stratport::graph
