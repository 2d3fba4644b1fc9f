#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stressmkl/features.hpp"
#include "stressmkl/io.hpp"
#include "stressmkl/signal.hpp"

namespace stressmkl {

/// Linear rise of `amplitude` over `rise_s` from `onset`, then exponential
/// recovery with time constant `tau_s`.
struct Startle {
    double onset = 0.0;
    double amplitude = 0.3;
    double rise_s = 1.0;
    double tau_s = 3.0;

    /// Onset to half recovery: rise_s + tau_s ln 2.
    [[nodiscard]] double half_recovery_duration() const;
};

/// EDA samples at t = k / sample_rate, k < duration * sample_rate.
std::vector<double> startle_signal(double sample_rate, double duration_s, double baseline,
                                   std::span<const Startle> startles);

/// Feature-level two-profile data. Even-indexed drives (profile 0) carry the
/// label in the EDA block, odd-indexed drives (profile 1) in the HR block;
/// with `swap_profiles` off every drive is profile 0. The uninformative
/// block is drawn high or low at random, independent of the label.
struct TwoProfileOptions {
    int drives = 40;
    int windows_per_drive = 50;  // half L, half H
    double high = 0.65;
    double low = 0.35;
    double sd = 0.08;
    bool swap_profiles = true;
    std::uint64_t seed = 1;
};

struct SynthInstances {
    std::vector<WindowInstance> instances;
    std::map<std::string, int> profile_of;  // drive -> planted profile
};

SynthInstances synth_two_profile(const TwoProfileOptions& opts);

/// Balanced labels drawn independently of uniform features.
std::vector<WindowInstance> synth_random_labels(int drives, int windows_per_drive, std::uint64_t seed);

/// Trace-level dataset: per drive an EDA and HR trace, a rest / highway /
/// city schedule and its annotation file, plus manifest.json in `dir`.
/// City driving raises HR and startle frequency; the size of each response
/// depends on the drive's profile (drive index parity).
struct TraceDatasetOptions {
    int drives = 6;
    double segment_s = 180.0;
    double eda_rate = 4.0;
    double hr_rate = 1.0;
    AnnotationKind annotation = AnnotationKind::Segments;
    std::uint64_t seed = 1;
};

/// Returns the manifest path.
std::filesystem::path write_trace_dataset(const std::filesystem::path& dir, const TraceDatasetOptions& opts);

/// Constant-condition drive of `duration_s` for windowing checks.
RawDrive synth_constant_drive(const std::string& drive_id, double duration_s, double eda_rate, double hr_rate,
                              Condition condition, std::uint64_t seed);

}  // namespace stressmkl
