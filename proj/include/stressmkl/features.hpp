#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stressmkl/signal.hpp"

namespace stressmkl {

inline constexpr std::size_t kEdaFeatureCount = 9;
inline constexpr std::size_t kHrFeatureCount = 5;
inline constexpr std::size_t kFeatureCount = kEdaFeatureCount + kHrFeatureCount;

/// Column names in storage order: EDA block followed by HR block.
const std::array<std::string, kFeatureCount>& feature_names();

enum class StressLabel { L = 0, M = 1, H = 2 };

std::string to_string(StressLabel label);
StressLabel parse_label(const std::string& text);
/// Binary target: H -> +1, L -> -1. Throws on M.
int to_binary(StressLabel label);

enum class Condition { Rest, Highway, City };
Condition parse_condition(const std::string& text);
std::string to_string(Condition c);

struct ConditionSegment {
    double start = 0.0;
    double end = 0.0;
    Condition condition = Condition::Rest;
};

/// One 30 s window with its per-view features.
struct WindowInstance {
    std::string dataset_id;
    std::string drive_id;
    double start = 0.0;
    double duration = 30.0;
    std::array<double, kEdaFeatureCount> eda{};
    std::array<double, kHrFeatureCount> hr{};
    StressLabel label = StressLabel::L;
    std::optional<double> score;

    [[nodiscard]] std::array<double, kFeatureCount> features() const;
    /// Stable 64-bit identity over drive, start and feature bits.
    [[nodiscard]] std::uint64_t key() const;
};

struct Peak {
    double onset = 0.0;
    double offset = 0.0;
    double amplitude = 0.0;

    [[nodiscard]] double duration() const { return offset - onset; }
};

struct PeakOptions {
    double slope_threshold = 0.01;  // normalized units per second
    double min_amplitude = 0.005;
    double smoothing_s = 1.0;
};

/// Samples of both modalities covering [start, start + duration).
struct WindowSegment {
    double start = 0.0;
    double duration = 0.0;
    std::vector<double> eda;
    std::vector<double> hr;
    double eda_rate = 1.0;
    double hr_rate = 1.0;
};

/// Windows start at t0 + k * window * (1 - overlap), t0 the later of the two
/// trace starts. Only windows fully inside both traces and clear of declared
/// gaps are emitted.
std::vector<WindowSegment> slide_windows(const SignalTrace& eda, const SignalTrace& hr, double window_s,
                                         double overlap_fraction);

/// Onset/max/half-recovery detection on a smoothed first derivative.
std::vector<Peak> detect_peaks(std::span<const double> segment, double sample_rate, const PeakOptions& opts);

/// [mean, std, min, max, kurtosis, skewness, peak_count, peak_total_amplitude,
/// peak_total_duration]. Population moments, Pearson kurtosis, zero-variance
/// windows report skewness = kurtosis = 0.
std::array<double, kEdaFeatureCount> eda_features(std::span<const double> segment, double sample_rate,
                                                  const PeakOptions& opts = {});

/// [mean, std, min, max, rmssd].
std::array<double, kHrFeatureCount> hr_features(std::span<const double> segment);

/// Majority condition covering at least half of the window. Throws on gaps,
/// ties and windows outside every segment.
StressLabel label_from_segments(double window_start, double window_duration,
                                std::span<const ConditionSegment> segments);

struct ScoreThresholds {
    double low = 0.33;
    double high = 0.67;
};

/// [0, low] -> L, (low, high) -> M, [high, 1] -> H.
StressLabel label_from_score(double score, const ScoreThresholds& thresholds = {});

/// Downsamples the larger class uniformly at random so |L| == |H|. Retained
/// instances keep their input order.
std::vector<WindowInstance> balance_downsample(std::span<const WindowInstance> instances, std::uint64_t seed);

}  // namespace stressmkl
