#pragma once

// Structured-text (JSON) files for bins, graphs, models, tuning results and
// synthetic ground truth. Doubles are written in shortest round-trip form,
// so write-then-read is exact.
//
// Model file layout:
//   {"kind": "mean" | "precision", "strata": K, "assets": [...],
//    "info": {...fit echo...},
//    "mu": [[K rows of n]]                          (mean)
//    "theta_packed": [[K rows of n(n+1)/2]]         (precision, upper
//                                                    triangle row by row)}

#include <string>

#include <json.hpp>

#include "stratport/dataio.hpp"
#include "stratport/models.hpp"
#include "stratport/strata_graph.hpp"
#include "stratport/tuner.hpp"

namespace stratport::io {

using Json = nlohmann::ordered_json;

Json to_json(const graph::DecileBins& bins);
graph::DecileBins bins_from_json(const Json& j);

Json to_json(const graph::RegularizationGraph& graph, const std::vector<double>& weights = {});
graph::RegularizationGraph graph_from_json(const Json& j);
/// "u v group [weight]" per line with 1-based nodes; the weight column is
/// left out when no weights are given.
std::string edge_list(const graph::RegularizationGraph& graph, const std::vector<double>& weights = {});

Json to_json(const models::ModelInfo& info);
models::ModelInfo info_from_json(const Json& j);

Json to_json(const models::MeanModel& model);
models::MeanModel mean_model_from_json(const Json& j);

Json to_json(const models::PrecisionModel& model);
models::PrecisionModel precision_model_from_json(const Json& j);

Json to_json(const tune::Grid& grid);
tune::Grid grid_from_json(const Json& j);

/// Selection summary (not the score table, which goes to TSV).
Json to_json(const tune::TuneResult& result);

Json to_json(const data::GroundTruth& truth);
data::GroundTruth ground_truth_from_json(const Json& j);

/// Reads a JSON file; parse errors become InputError.
Json read_json_file(const std::string& path);
/// Writes `j` indented by 2 with a trailing newline.
void write_text_file(const std::string& path, const std::string& text);
std::string dump(const Json& j);

}  // namespace stratport::io
