#pragma once

// Exhaustive grid search with a bias toward heavier regularization.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace stratport::tune {

enum class Direction { maximize, minimize };

struct Axis {
    std::string name;
    std::vector<double> values;
    bool regularization = true;  // counts toward the tie-break product
};

struct Grid {
    std::string stage = "coarse";
    std::vector<Axis> axes;

    std::size_t size() const;
    /// Values of combination `index`; the first axis varies slowest.
    std::vector<double> combination(std::size_t index) const;
    void validate() const;
};

struct TuneResult {
    Grid grid;
    Direction direction = Direction::maximize;
    double tolerance = 0.01;
    std::vector<double> scores;       // one per combination, grid order
    std::vector<std::string> errors;  // empty string when the evaluation succeeded
    std::size_t best = 0;             // best raw score
    std::size_t selected = 0;         // after the regularization tie rule
    std::string rationale;

    std::vector<double> selected_values() const { return grid.combination(selected); }
};

using Evaluator = std::function<double(const std::vector<double>&)>;

/// Evaluates every combination (on `threads` workers), then picks the best
/// score and, among scores within `tolerance` (relative) of it, the one
/// with the largest product of regularization-axis values. Remaining ties go
/// to the earliest combination. Failed or non-finite evaluations score as
/// the worst possible value.
TuneResult grid_search(const Grid& grid, const Evaluator& evaluate, Direction direction, int threads = 1,
                       double tolerance = 0.01);

/// lo * (hi/lo)^(i/(count-1)), i = 0..count-1, with exact endpoints.
std::vector<double> log_spaced(int count, double lo, double hi);

/// Tab-separated score table: one column per axis, then score and error.
std::string to_tsv(const TuneResult& result);

namespace presets {
Grid return_coarse();
Grid return_fine();
Grid risk_coarse();
Grid risk_fine();
/// 25 x 25 log-spaced values in [0.1, 10] for (gamma_sc, gamma_tc).
Grid policy(int count = 25, double lo = 0.1, double hi = 10.0);
}  // namespace presets

}  // namespace stratport::tune
