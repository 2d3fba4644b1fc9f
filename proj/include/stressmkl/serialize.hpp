#pragma once

#include <string>

#include "json.hpp"
#include "stressmkl/clustering.hpp"
#include "stressmkl/harness.hpp"

namespace stressmkl {

using Json = nlohmann::json;

/// Pretty-printed with a trailing newline; doubles round-trip exactly.
std::string dump(const Json& j);
Json parse_json(const std::string& text, const std::string& what);

Json to_json(const TrainedModel& model, const ExperimentConfig& cfg);
/// Inverse of to_json. The `kind` field selects the learner.
TrainedModel model_from_json(const Json& j);

/// Drive -> 1-based task, plus fallback drives.
Json assignment_to_json(const TaskAssignment& a, const std::vector<std::string>& fallback, std::uint64_t seed);
TaskAssignment assignment_from_json(const Json& j);

Json experiment_to_json(const ExperimentConfig& cfg);
Json report_to_json(const CvReport& report);
/// Reads back the fields `report` and the eta heatmap use.
CvReport report_from_json(const Json& j);

}  // namespace stressmkl
