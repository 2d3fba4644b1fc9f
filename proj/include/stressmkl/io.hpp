#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stressmkl/features.hpp"
#include "stressmkl/signal.hpp"

namespace stressmkl {

/// Writes to a temporary sibling and renames it over `path`. Parent
/// directories are created.
void atomic_write(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& what);

/// Comma-separated table with one header row. Cells are trimmed and stripped
/// of surrounding quotes.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of `name` in the header, or nullopt.
    [[nodiscard]] std::optional<std::size_t> column(const std::string& name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

/// Throws a Schema error listing missing and unexpected columns unless
/// `found` starts with exactly `expected` (extra trailing columns allowed
/// when `allow_extra`).
void require_columns(const std::vector<std::string>& expected, const std::vector<std::string>& found,
                     const std::string& what, bool allow_extra = false);

/// `time_s,value` trace file.
SignalTrace read_trace_csv(const std::filesystem::path& path, const std::string& drive_id, Modality modality,
                           double sample_rate);
void write_trace_csv(const std::filesystem::path& path, const SignalTrace& trace);

/// `start_s,end_s,condition` file.
std::vector<ConditionSegment> read_segments_csv(const std::filesystem::path& path);
void write_segments_csv(const std::filesystem::path& path, std::span<const ConditionSegment> segments);

struct ScoreSample {
    double time = 0.0;
    double score = 0.0;
};

/// Two-column score file; `score_column` names the second column.
std::vector<ScoreSample> read_scores_csv(const std::filesystem::path& path, const std::string& score_column = "score");
void write_scores_csv(const std::filesystem::path& path, std::span<const ScoreSample> scores);

/// Instances CSV `drive_id,start_s,label,f1..f14` plus a JSON sidecar header
/// naming the features. sidecar_path("x/instances.csv") is
/// "x/instances.header.json".
std::filesystem::path sidecar_path(const std::filesystem::path& instances_csv);
void write_instances(const std::filesystem::path& path, std::span<const WindowInstance> instances,
                     const std::string& dataset_id);
/// Throws a Schema error when the sidecar features differ from
/// feature_names().
std::vector<WindowInstance> read_instances(const std::filesystem::path& path);

enum class AnnotationKind { Segments, Score };

enum class Adapter { Generic, DriveDb, HciLab, AffectiveRoad };
std::string to_string(Adapter a);
Adapter parse_adapter(const std::string& text);

struct DriveEntry {
    std::string drive_id;
    std::filesystem::path eda;
    std::filesystem::path hr;
    std::filesystem::path record;  // drivedb: one multi-column file
    std::filesystem::path annotation;
    AnnotationKind annotation_kind = AnnotationKind::Segments;
    double eda_rate = 4.0;
    double hr_rate = 1.0;
};

/// JSON manifest binding files to drives, paths relative to the manifest.
struct Manifest {
    std::string dataset_id;
    Adapter adapter = Adapter::Generic;
    std::map<std::string, std::string> columns;  // adapter column overrides
    std::vector<DriveEntry> drives;
};

Manifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Raw inputs of one drive after adapter translation. Scores are in [0, 1].
struct RawDrive {
    SignalTrace eda;
    SignalTrace hr;
    std::vector<ConditionSegment> segments;
    std::vector<ScoreSample> scores;
    AnnotationKind annotation_kind = AnnotationKind::Segments;
};

RawDrive load_drive(const Manifest& manifest, const DriveEntry& entry);

/// drivedb condition order between consecutive marker events.
const std::vector<Condition>& drivedb_condition_sequence();

/// Segments from the rising edges of a marker channel. Throws a Schema error
/// unless exactly one event separates each pair of conditions.
std::vector<ConditionSegment> segments_from_markers(std::span<const double> times, std::span<const double> marker,
                                                    double end_time);

}  // namespace stressmkl
