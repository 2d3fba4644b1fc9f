#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stressmkl/config.hpp"
#include "stressmkl/io.hpp"
#include "stressmkl/synth.hpp"

namespace stressmkl {

struct DropRecord {
    double start = 0.0;
    std::string reason;
};

struct DriveExtraction {
    std::string drive_id;
    std::vector<WindowInstance> instances;
    std::vector<DropRecord> dropped;
    std::vector<Gap> gaps;
    std::optional<std::string> error;  // set when the whole drive failed
};

/// signal -> windows -> labels -> features for one drive. Per-window
/// problems are recorded in `dropped`; a failure of the drive as a whole
/// throws.
DriveExtraction extract_drive(const RawDrive& raw, const std::string& dataset_id, const PipelineConfig& cfg);

struct ExtractResult {
    std::vector<WindowInstance> instances;
    std::vector<DriveExtraction> drives;
};

/// Writes instances.csv, instances.header.json and extraction_log.json into
/// `out`. Fails only when no drive succeeds.
ExtractResult cmd_extract(const std::filesystem::path& manifest, const PipelineConfig& cfg,
                          const std::filesystem::path& out);

/// Clusters the drives of an instances file; writes profiles.csv,
/// assignment.json and similarity.svg. Features are min-max scaled over the
/// file first, as in training.
ClusteringResult cmd_profile(const std::filesystem::path& instances, const PipelineConfig& cfg,
                             const std::filesystem::path& out);

/// Fits on all (balanced) instances and writes model.json. With more than
/// one grid point the hyperparameters come from an inner CV over the data.
TrainedModel cmd_train(const std::filesystem::path& instances, const std::optional<std::filesystem::path>& assignment,
                       const PipelineConfig& cfg, const std::filesystem::path& out);

/// Writes predictions.csv (drive_id,start_s,label,score).
ModelOutput cmd_predict(const std::filesystem::path& model, const std::filesystem::path& instances,
                        const std::filesystem::path& out);

/// Nested CV; writes cv_report.json and eta_heatmap.svg.
CvReport cmd_evaluate(const std::filesystem::path& instances, const PipelineConfig& cfg,
                      const std::filesystem::path& out);

/// Summary table over CvReport files; writes summary.md, summary.csv and
/// one eta heatmap per mtmkl report. Returns the markdown table.
std::string cmd_report(const std::vector<std::filesystem::path>& reports, const std::filesystem::path& out);

struct SynthCommand {
    std::string kind = "instances";  // instances | traces
    TwoProfileOptions instances;
    TraceDatasetOptions traces;
};

/// instances: instances.csv (+ header) and truth.json; traces: per-drive
/// files and manifest.json.
void cmd_synth(const SynthCommand& cmd, const std::filesystem::path& out);

}  // namespace stressmkl
