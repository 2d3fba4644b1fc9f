#include "stressmkl/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stressmkl/error.hpp"

namespace stressmkl {

std::string to_string(Modality m) { return m == Modality::EDA ? "EDA" : "HR"; }

void validate_trace(const SignalTrace& trace) {
    if (!(trace.sample_rate > 0.0) || !std::isfinite(trace.sample_rate))
        throw Error(ErrorKind::InvalidParameter, "sample_rate must be positive");
    if (trace.times.size() != trace.values.size())
        throw Error(ErrorKind::Shape, "times and values differ in length");
    for (std::size_t i = 1; i < trace.times.size(); ++i) {
        if (!(trace.times[i] > trace.times[i - 1]))
            throw Error(ErrorKind::InvalidParameter,
                        "timestamps not strictly increasing at index " + std::to_string(i) + " of " +
                            trace.drive_id + "/" + to_string(trace.modality));
    }
    for (double v : trace.values)
        if (!std::isfinite(v)) throw Error(ErrorKind::InvalidParameter, "non-finite sample in " + trace.drive_id);
}

SignalTrace resample_uniform(const SignalTrace& trace, double max_gap_s) {
    validate_trace(trace);
    if (trace.empty()) throw Error(ErrorKind::EmptyInput, "empty trace " + trace.drive_id);
    SignalTrace out;
    out.drive_id = trace.drive_id;
    out.modality = trace.modality;
    out.sample_rate = trace.sample_rate;
    out.gaps = trace.gaps;

    const double t0 = trace.times.front();
    const double dt = 1.0 / trace.sample_rate;
    const double span = trace.times.back() - t0;
    const auto n = static_cast<std::size_t>(std::floor(span * trace.sample_rate + 1e-9)) + 1;
    out.times.resize(n);
    out.values.resize(n);
    std::size_t j = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        while (j + 1 < trace.times.size() && trace.times[j + 1] <= t) ++j;
        double v;
        if (j + 1 >= trace.times.size()) {
            v = trace.values.back();
        } else {
            const double ta = trace.times[j], tb = trace.times[j + 1];
            const double w = (t - ta) / (tb - ta);
            v = trace.values[j] + w * (trace.values[j + 1] - trace.values[j]);
        }
        out.times[k] = t;
        out.values[k] = v;
    }
    for (std::size_t i = 1; i < trace.times.size(); ++i) {
        if (trace.times[i] - trace.times[i - 1] > max_gap_s)
            out.gaps.push_back({trace.times[i - 1], trace.times[i]});
    }
    return out;
}

std::complex<double> Biquad::response(double freq_hz, double sample_rate) const {
    const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate;
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

Biquad butterworth_lowpass(double cutoff_hz, double sample_rate) {
    if (!(sample_rate > 0.0)) throw Error(ErrorKind::InvalidParameter, "sample_rate must be positive");
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate / 2.0))
        throw Error(ErrorKind::InvalidParameter, "cutoff must lie in (0, Nyquist)");
    const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate);
    const double k2 = k * k;
    const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
    Biquad f;
    f.b0 = k2 * norm;
    f.b1 = 2.0 * f.b0;
    f.b2 = f.b0;
    f.a1 = 2.0 * (k2 - 1.0) * norm;
    f.a2 = (1.0 - std::numbers::sqrt2 * k + k2) * norm;
    return f;
}

std::vector<double> biquad_filter(const Biquad& f, std::span<const double> x) {
    std::vector<double> y(x.size());
    if (x.empty()) return y;
    // Transposed direct form II. For a constant input c the steady state is
    // y = c (unit DC gain), giving the two state values below.
    const double x0 = x[0];
    double s1 = (1.0 - f.b0) * x0;
    double s2 = (f.b2 - f.a2) * x0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        const double yi = f.b0 * xi + s1;
        s1 = f.b1 * xi - f.a1 * yi + s2;
        s2 = f.b2 * xi - f.a2 * yi;
        y[i] = yi;
    }
    return y;
}

std::vector<double> filtfilt(const Biquad& f, std::span<const double> x, std::size_t pad) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    pad = std::min(pad, n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    auto fwd = biquad_filter(f, ext);
    std::reverse(fwd.begin(), fwd.end());
    auto bwd = biquad_filter(f, fwd);
    std::reverse(bwd.begin(), bwd.end());
    return {bwd.begin() + static_cast<std::ptrdiff_t>(pad),
            bwd.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

SignalTrace lowpass_filter(const SignalTrace& trace, double cutoff_hz) {
    if (trace.modality != Modality::EDA)
        throw Error(ErrorKind::InvalidParameter, "low-pass filtering applies to EDA traces only");
    if (trace.empty()) throw Error(ErrorKind::EmptyInput, "empty trace " + trace.drive_id);
    const Biquad f = butterworth_lowpass(cutoff_hz, trace.sample_rate);
    // pad with three time constants of the cutoff
    const auto pad = static_cast<std::size_t>(std::ceil(3.0 * trace.sample_rate / cutoff_hz));
    SignalTrace out = trace;
    out.values = filtfilt(f, trace.values, pad);
    return out;
}

SignalTrace minmax_normalize(const SignalTrace& trace) {
    if (trace.empty()) throw Error(ErrorKind::EmptyInput, "empty trace " + trace.drive_id);
    const auto [lo_it, hi_it] = std::minmax_element(trace.values.begin(), trace.values.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) throw DegenerateRangeError(lo);
    SignalTrace out = trace;
    const double range = hi - lo;
    for (double& v : out.values) v = std::clamp((v - lo) / range, 0.0, 1.0);
    return out;
}

SignalTrace preprocess(const SignalTrace& raw, const PreprocessOptions& opts) {
    SignalTrace t = resample_uniform(raw, opts.max_gap_s);
    if (t.modality == Modality::EDA) t = lowpass_filter(t, opts.eda_cutoff_hz);
    return minmax_normalize(t);
}

}  // namespace stressmkl
