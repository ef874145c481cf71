#include "stratport/tuner.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "stratport/error.hpp"
#include "stratport/parallel.hpp"
#include "stratport/text.hpp"

namespace stratport::tune {

std::size_t Grid::size() const {
    if (axes.empty()) return 0;
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.values.size();
    return n;
}

std::vector<double> Grid::combination(std::size_t index) const {
    if (index >= size()) throw InputError("grid index out of range");
    std::vector<double> out(axes.size());
    for (std::size_t j = axes.size(); j-- > 0;) {
        const auto len = axes[j].values.size();
        out[j] = axes[j].values[index % len];
        index /= len;
    }
    return out;
}

void Grid::validate() const {
    if (axes.empty()) throw InputError("grid has no axes");
    for (const auto& a : axes) {
        if (a.values.empty()) throw InputError("grid axis '" + a.name + "' is empty");
        for (double v : a.values) {
            if (!(v > 0.0) || !std::isfinite(v)) throw InputError("grid axis '" + a.name + "' has a nonpositive value");
        }
    }
}

TuneResult grid_search(const Grid& grid, const Evaluator& evaluate, Direction direction, int threads,
                       double tolerance) {
    grid.validate();
    if (!(tolerance >= 0.0)) throw InputError("tie tolerance must be >= 0");
    const std::size_t n = grid.size();
    TuneResult r;
    r.grid = grid;
    r.direction = direction;
    r.tolerance = tolerance;
    r.scores.assign(n, 0.0);
    r.errors.assign(n, std::string());

    const double worst = direction == Direction::maximize ? -std::numeric_limits<double>::infinity()
                                                          : std::numeric_limits<double>::infinity();
    parallel_for(n, threads, [&](std::size_t i) {
        try {
            const double s = evaluate(grid.combination(i));
            if (std::isfinite(s)) {
                r.scores[i] = s;
            } else {
                r.scores[i] = worst;
                r.errors[i] = "non-finite score";
            }
        } catch (const std::exception& e) {
            r.scores[i] = worst;
            r.errors[i] = e.what();
            if (r.errors[i].empty()) r.errors[i] = "evaluation failed";
        }
    });

    // orient so that larger is better
    auto oriented = [&](std::size_t i) { return direction == Direction::maximize ? r.scores[i] : -r.scores[i]; };
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!r.errors[i].empty()) continue;
        if (!any || oriented(i) > oriented(r.best)) r.best = i;
        any = true;
    }
    if (!any) throw TuningError("every grid evaluation failed; first error: " + r.errors.front());

    const double best = oriented(r.best);
    const double slack = tolerance * std::abs(best);
    r.selected = r.best;
    double best_reg = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (!r.errors[i].empty() || oriented(i) < best - slack) continue;
        const auto values = grid.combination(i);
        double reg = 0.0;  // log of the product
        for (std::size_t j = 0; j < values.size(); ++j) {
            if (grid.axes[j].regularization) reg += std::log(values[j]);
        }
        if (reg > best_reg) {
            best_reg = reg;
            r.selected = i;
        }
    }
    std::ostringstream why;
    why << "best score " << text::format_double(r.scores[r.best]) << " at combination " << r.best;
    if (r.selected != r.best) {
        why << "; selected combination " << r.selected << " (score " << text::format_double(r.scores[r.selected])
            << ") as the most regularized within " << text::format_double(tolerance * 100.0) << "% of the best";
    } else {
        why << "; no more-regularized combination within " << text::format_double(tolerance * 100.0) << "%";
    }
    r.rationale = why.str();
    return r;
}

std::vector<double> log_spaced(int count, double lo, double hi) {
    if (!(lo > 0.0) || !(hi > 0.0)) throw InputError("log_spaced bounds must be > 0");
    if (count < 2) throw InputError("log_spaced needs at least two points");
    std::vector<double> out(static_cast<std::size_t>(count));
    const double ratio = std::log(hi / lo);
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = lo * std::exp(ratio * i / (count - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::string to_tsv(const TuneResult& result) {
    std::ostringstream os;
    for (const auto& a : result.grid.axes) os << a.name << '\t';
    os << "score\terror\n";
    for (std::size_t i = 0; i < result.scores.size(); ++i) {
        for (double v : result.grid.combination(i)) os << text::format_double(v) << '\t';
        os << text::format_double(result.scores[i]) << '\t' << result.errors[i] << '\n';
    }
    return os.str();
}

namespace presets {

Grid return_coarse() {
    return {"coarse",
            {{"local", {0.001, 0.01, 0.1}},
             {"vol", {1, 10, 100, 1000, 10000}},
             {"inf", {1, 10, 100, 1000, 10000}},
             {"mort", {1, 10, 100, 1000, 10000}}}};
}

Grid return_fine() {
    return {"fine",
            {{"local", {0.0075, 0.01, 0.0125}},
             {"vol", {2, 5, 10, 20, 50}},
             {"inf", {2, 5, 10, 20, 50}},
             {"mort", {200, 500, 1000, 2000, 5000}}}};
}

Grid risk_coarse() {
    return {"coarse",
            {{"vol", {0.1, 1, 10, 100, 1000}}, {"inf", {0.1, 1, 10, 100, 1000}}, {"mort", {0.1, 1, 10, 100, 1000}}}};
}

Grid risk_fine() {
    return {"fine", {{"vol", {0.2, 0.5, 1, 2, 5}}, {"inf", {0.2, 0.5, 1, 2, 5}}, {"mort", {20, 50, 100, 200, 500}}}};
}

Grid policy(int count, double lo, double hi) {
    const auto axis = log_spaced(count, lo, hi);
    return {"coarse", {{"gamma_sc", axis}, {"gamma_tc", axis}}};
}

}  // namespace presets

}  // namespace stratport::tune
