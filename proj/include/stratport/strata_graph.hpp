#pragma once

// Market-condition grid: quantile binning of raw indicators, the mixed-radix
// flat index over the grid, and the Cartesian product of chain graphs that
// couples neighbouring conditions.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "stratport/date.hpp"

namespace stratport::graph {

/// Per-indicator quantile boundaries. With the default 10 levels these are
/// the 10%..90% deciles, 9 per indicator.
struct DecileBins {
    std::vector<std::string> names;
    std::vector<std::vector<double>> boundaries;
    DateRange fit_range;
    int levels = 10;

    std::size_t indicators() const { return names.size(); }
    /// Throws InputError if a boundary list has the wrong length or is not
    /// strictly increasing.
    void validate() const;
};

/// Empirical quantile with linear interpolation between order statistics
/// (h = (N-1)p). `sorted` must be ascending and nonempty.
double quantile_sorted(std::span<const double> sorted, double p);

/// The levels-1 interior quantile boundaries of `values`. Throws
/// DegenerateBinsError with fewer than `levels` distinct values or when the
/// boundaries collapse.
std::vector<double> quantile_boundaries(std::span<const double> values, int levels = 10);

/// Boundaries for one indicator computed from the observations whose date
/// falls in `fit_range`.
std::vector<double> compute_decile_bins(std::span<const Date> dates, std::span<const double> values,
                                        const DateRange& fit_range, int levels = 10);

/// Shape of the condition grid; dims[0] is the most significant coordinate.
class GridShape {
public:
    GridShape() = default;
    explicit GridShape(std::vector<int> dims);

    const std::vector<int>& dims() const { return dims_; }
    std::size_t rank() const { return dims_.size(); }
    std::size_t size() const { return size_; }

    /// 1-based flat index of a 1-based level tuple, first coordinate major:
    /// for (10,10,10) this is (a-1)*100 + (b-1)*10 + c.
    std::size_t flat_index(std::span<const int> levels) const;
    /// Inverse of flat_index.
    std::vector<int> levels(std::size_t flat) const;

private:
    std::vector<int> dims_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

/// A point on the grid. `index` is 1-based; `stratum()` gives the 0-based
/// row used by model tables.
struct MarketCondition {
    std::vector<int> levels;
    std::size_t index = 0;

    std::size_t stratum() const { return index - 1; }
};

MarketCondition make_condition(const GridShape& shape, std::span<const int> levels);
MarketCondition make_condition(const GridShape& shape, std::size_t flat);

/// Level of `value` given ascending boundaries: one plus the number of
/// boundaries strictly below it. Values on a boundary fall in the lower bin;
/// values outside the fitted range clamp to the end bins.
int assign_level(double value, std::span<const double> boundaries);

/// Maps one observation of every indicator to its grid condition.
MarketCondition assign_condition(std::span<const double> values, const DecileBins& bins);

/// Shape implied by a set of bins (every indicator gets `levels` levels).
GridShape shape_of(const DecileBins& bins);

struct Edge {
    std::size_t u = 0;  // 0-based stratum
    std::size_t v = 0;
    std::size_t group = 0;
};

/// Undirected graph on the strata; every edge belongs to one weight group.
struct RegularizationGraph {
    std::size_t nodes = 0;
    std::vector<Edge> edges;
    std::vector<std::string> groups;
    GridShape shape;

    /// Edge list restricted to edges whose group weight is positive.
    std::vector<Edge> active_edges(std::span<const double> weights) const;
};

/// Edges join grid points that differ by one in exactly one coordinate; the
/// group of an edge is that coordinate.
RegularizationGraph build_product_chain_graph(const std::vector<int>& dims,
                                              std::vector<std::string> group_names = {});

/// L = diag(W 1) - W where W_ij is the weight of the group of edge (i, j).
Eigen::SparseMatrix<double> weighted_laplacian(const RegularizationGraph& graph,
                                               std::span<const double> weights);

/// Sum over undirected edges of w_e * ||theta_u - theta_v||^2, which equals
/// 1/2 sum_ij W_ij ||theta_i - theta_j||^2. Rows of `theta` are strata.
double laplacian_penalty(const RegularizationGraph& graph, std::span<const double> weights,
                         const Eigen::MatrixXd& theta);

/// Connected components over positive-weight edges; returns the component id
/// of every node, ids numbered by first appearance.
std::vector<std::size_t> connected_components(const RegularizationGraph& graph,
                                              std::span<const double> weights);

}  // namespace stratport::graph
