#pragma once

#include <complex>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stressmkl {

enum class Modality { EDA, HR };

std::string to_string(Modality m);

/// One interval [begin, end) in seconds with no usable samples.
struct Gap {
    double begin = 0.0;
    double end = 0.0;
};

/// Timestamped samples of one modality for one drive. Values are µS for raw
/// EDA and beats per minute for raw HR; normalized traces lie in [0, 1].
struct SignalTrace {
    std::string drive_id;
    Modality modality = Modality::EDA;
    double sample_rate = 1.0;
    std::vector<double> times;
    std::vector<double> values;
    std::vector<Gap> gaps;

    [[nodiscard]] std::size_t size() const { return values.size(); }
    [[nodiscard]] bool empty() const { return values.empty(); }
    /// Start of the covered timeline.
    [[nodiscard]] double start_time() const { return times.front(); }
    /// End of the covered timeline: each sample owns one sampling period.
    [[nodiscard]] double end_time() const { return times.back() + 1.0 / sample_rate; }
};

/// Throws unless sample_rate > 0, sizes agree and timestamps strictly increase.
void validate_trace(const SignalTrace& trace);

/// Linear interpolation onto t0 + k / sample_rate. Spans where consecutive
/// input samples are more than `max_gap_s` apart are recorded in `gaps`.
SignalTrace resample_uniform(const SignalTrace& trace, double max_gap_s);

/// Direct-form biquad coefficients, a0 normalized to 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    [[nodiscard]] std::complex<double> response(double freq_hz, double sample_rate) const;
};

/// Second-order Butterworth low-pass via the bilinear transform with
/// frequency prewarping.
Biquad butterworth_lowpass(double cutoff_hz, double sample_rate);

/// Single forward pass with steady-state initial conditions scaled by the
/// first input sample.
std::vector<double> biquad_filter(const Biquad& f, std::span<const double> x);

/// Forward-backward filtering with odd-reflection padding. Zero phase,
/// squared magnitude response.
std::vector<double> filtfilt(const Biquad& f, std::span<const double> x, std::size_t pad);

/// Zero-phase second-order Butterworth low-pass for an EDA trace. The trace
/// must already be uniformly sampled.
SignalTrace lowpass_filter(const SignalTrace& trace, double cutoff_hz);

/// (v - min) / (max - min) over the whole trace. Throws DegenerateRangeError
/// on a constant trace.
SignalTrace minmax_normalize(const SignalTrace& trace);

struct PreprocessOptions {
    double eda_cutoff_hz = 1.0;
    double max_gap_s = 1.0;
};

/// resample -> (EDA only) low-pass -> min-max normalize.
SignalTrace preprocess(const SignalTrace& raw, const PreprocessOptions& opts);

}  // namespace stressmkl
