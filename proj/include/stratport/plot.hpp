#pragma once

// Minimal static SVG charts for the CLI reports.

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stratport::plot {

struct Series {
    std::string name;
    std::vector<double> values;
};

/// Lines over a shared x index; `x_labels` (optional) annotate a few ticks.
std::string line_chart(const std::string& title, const std::vector<Series>& series,
                       const std::vector<std::string>& x_labels = {}, const std::string& note = "");

/// Stacked areas: positive parts stacked upward, negative parts downward.
/// Rows of `weights` are days, columns are the named series.
std::string stacked_area(const std::string& title, const Eigen::MatrixXd& weights,
                         const std::vector<std::string>& names, const std::vector<std::string>& x_labels = {},
                         const std::string& note = "");

/// Cell (i, j) of `values` is drawn at column i of `x` and row j of `y`
/// (both log-scale axes labelled by value). A star marks `mark` if given.
std::string heatmap(const std::string& title, const std::string& x_name, const std::vector<double>& x,
                    const std::string& y_name, const std::vector<double>& y, const Eigen::MatrixXd& values,
                    int mark_x = -1, int mark_y = -1, const std::string& note = "");

}  // namespace stratport::plot
