#pragma once

#include <string>
#include <vector>

#include "stressmkl/features.hpp"
#include "stressmkl/harness.hpp"
#include "stressmkl/signal.hpp"

namespace stressmkl {

/// Every tunable constant of the pipeline. Loaded from a flat `key = value`
/// file; see config_keys() for the recognized keys.
struct PipelineConfig {
    PreprocessOptions preprocess;
    double window_s = 30.0;
    double overlap = 0.5;
    PeakOptions peaks;
    ScoreThresholds score_thresholds;
    ExperimentConfig experiment;
    bool balance = true;
};

/// Applies one setting. Throws InvalidParameter on unknown keys or
/// malformed values.
void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// Parses `key = value` lines; blank lines and `#` comments are ignored.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);

/// Canonical text form, one line per key in config_keys() order. Parsing it
/// back yields the same configuration.
std::string to_text(const PipelineConfig& cfg);

const std::vector<std::string>& config_keys();

}  // namespace stressmkl
