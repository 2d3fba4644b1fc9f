#include "stressmkl/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>

#include "stressmkl/error.hpp"
#include "stressmkl/rng.hpp"

namespace stressmkl {

const std::array<std::string, kFeatureCount>& feature_names() {
    static const std::array<std::string, kFeatureCount> names = {
        "eda_mean",     "eda_std",       "eda_min",      "eda_max",    "eda_kurtosis",
        "eda_skewness", "eda_peak_count", "eda_peak_amplitude", "eda_peak_duration",
        "hr_mean",      "hr_std",        "hr_min",       "hr_max",     "hr_rmssd"};
    return names;
}

std::string to_string(StressLabel label) {
    switch (label) {
        case StressLabel::L: return "L";
        case StressLabel::M: return "M";
        case StressLabel::H: return "H";
    }
    return "?";
}

StressLabel parse_label(const std::string& text) {
    if (text == "L") return StressLabel::L;
    if (text == "M") return StressLabel::M;
    if (text == "H") return StressLabel::H;
    throw Error(ErrorKind::Schema, "unknown label '" + text + "'");
}

int to_binary(StressLabel label) {
    if (label == StressLabel::M) throw Error(ErrorKind::InvalidParameter, "M label has no binary target");
    return label == StressLabel::H ? 1 : -1;
}

Condition parse_condition(const std::string& text) {
    if (text == "rest") return Condition::Rest;
    if (text == "highway") return Condition::Highway;
    if (text == "city") return Condition::City;
    throw Error(ErrorKind::Schema, "unknown condition '" + text + "' (expected rest, highway, city)");
}

std::string to_string(Condition c) {
    switch (c) {
        case Condition::Rest: return "rest";
        case Condition::Highway: return "highway";
        case Condition::City: return "city";
    }
    return "?";
}

std::array<double, kFeatureCount> WindowInstance::features() const {
    std::array<double, kFeatureCount> out{};
    std::copy(eda.begin(), eda.end(), out.begin());
    std::copy(hr.begin(), hr.end(), out.begin() + kEdaFeatureCount);
    return out;
}

std::uint64_t WindowInstance::key() const {
    // FNV-1a
    std::uint64_t h = 1469598103934665603ULL;
    auto mix_byte = [&](unsigned char c) {
        h ^= c;
        h *= 1099511628211ULL;
    };
    auto mix_u64 = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(v >> (8 * i)));
    };
    for (char c : drive_id) mix_byte(static_cast<unsigned char>(c));
    mix_byte(0);
    mix_u64(std::bit_cast<std::uint64_t>(start));
    for (double f : features()) mix_u64(std::bit_cast<std::uint64_t>(f));
    return h;
}

namespace {

constexpr double kTimeEps = 1e-6;

bool overlaps_gap(const SignalTrace& t, double a, double b) {
    return std::any_of(t.gaps.begin(), t.gaps.end(), [&](const Gap& g) { return g.begin < b && g.end > a; });
}

std::vector<double> slice(const SignalTrace& t, double a, double b) {
    const double t0 = t.start_time();
    const double fs = t.sample_rate;
    auto first = static_cast<long>(std::ceil((a - t0) * fs - kTimeEps * fs));
    auto last = static_cast<long>(std::ceil((b - t0) * fs - kTimeEps * fs));  // exclusive
    first = std::max(first, 0L);
    last = std::min(last, static_cast<long>(t.size()));
    if (last <= first) return {};
    return {t.values.begin() + first, t.values.begin() + last};
}

}  // namespace

std::vector<WindowSegment> slide_windows(const SignalTrace& eda, const SignalTrace& hr, double window_s,
                                         double overlap_fraction) {
    if (!(window_s > 0.0)) throw Error(ErrorKind::InvalidParameter, "window must be positive");
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
        throw Error(ErrorKind::InvalidParameter, "overlap_fraction must lie in [0, 1)");
    std::vector<WindowSegment> out;
    if (eda.empty() || hr.empty()) return out;
    const double stride = window_s * (1.0 - overlap_fraction);
    const double t0 = std::max(eda.start_time(), hr.start_time());
    const double t_end = std::min(eda.end_time(), hr.end_time());
    for (std::size_t k = 0;; ++k) {
        const double s = t0 + static_cast<double>(k) * stride;
        const double e = s + window_s;
        if (e > t_end + kTimeEps) break;
        if (overlaps_gap(eda, s, e) || overlaps_gap(hr, s, e)) continue;
        WindowSegment seg;
        seg.start = s;
        seg.duration = window_s;
        seg.eda = slice(eda, s, e);
        seg.hr = slice(hr, s, e);
        seg.eda_rate = eda.sample_rate;
        seg.hr_rate = hr.sample_rate;
        out.push_back(std::move(seg));
    }
    return out;
}

std::vector<Peak> detect_peaks(std::span<const double> x, double sample_rate, const PeakOptions& opts) {
    std::vector<Peak> peaks;
    const std::size_t n = x.size();
    if (n < 2) return peaks;
    const double dt = 1.0 / sample_rate;

    // forward differences, then a centered moving average spanning smoothing_s
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (x[i + 1] - x[i]) * sample_rate;
    const auto half = static_cast<std::size_t>(std::max(0.0, std::round(opts.smoothing_s * sample_rate / 2.0)));
    std::vector<double> prefix(d.size() + 1, 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) prefix[i + 1] = prefix[i] + d[i];
    std::vector<double> sd(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(d.size(), i + half + 1);
        sd[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
    }

    std::size_t i = 0;
    while (i < sd.size()) {
        if (!(sd[i] > opts.slope_threshold)) {
            ++i;
            continue;
        }
        const std::size_t detect = i;
        // rising run: smoothed slope stays positive
        std::size_t run_end = detect;
        while (run_end + 1 < sd.size() && sd[run_end + 1] > 0.0) ++run_end;
        const std::size_t search_end = std::min(n - 1, run_end + 1);
        std::size_t peak_idx = detect;
        for (std::size_t k = detect; k <= search_end; ++k)
            if (x[k] > x[peak_idx]) peak_idx = k;
        // onset: last minimum before the maximum
        std::size_t onset_idx = detect;
        for (std::size_t k = detect; k <= peak_idx; ++k)
            if (x[k] <= x[onset_idx]) onset_idx = k;
        const double amplitude = x[peak_idx] - x[onset_idx];
        const double half_level = x[onset_idx] + 0.5 * amplitude;
        std::size_t offset_idx = n - 1;
        double offset_time = static_cast<double>(n - 1) * dt;
        for (std::size_t k = peak_idx + 1; k < n; ++k) {
            if (x[k] < half_level) {
                offset_idx = k;
                // linear crossing between the last sample above and this one
                const double frac = (x[k - 1] - half_level) / (x[k - 1] - x[k]);
                offset_time = (static_cast<double>(k - 1) + frac) * dt;
                break;
            }
        }
        if (amplitude >= opts.min_amplitude && offset_idx > onset_idx) {
            peaks.push_back({static_cast<double>(onset_idx) * dt, offset_time, amplitude});
        }
        i = std::max(offset_idx, run_end + 1);
    }
    return peaks;
}

namespace {

struct Moments {
    double mean = 0, stddev = 0, min = 0, max = 0, skewness = 0, kurtosis = 0;
};

Moments moments(std::span<const double> x) {
    Moments m;
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    m.min = *lo;
    m.max = *hi;
    if (*lo == *hi) {  // flat: exact mean, no rounding residue in the spread
        m.mean = *lo;
        return m;
    }
    const double n = static_cast<double>(x.size());
    m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : x) {
        const double c = v - m.mean;
        const double c2 = c * c;
        m2 += c2;
        m3 += c2 * c;
        m4 += c2 * c2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    m.stddev = std::sqrt(m2);
    if (m2 > 1e-24) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.kurtosis = m4 / (m2 * m2);
    }
    return m;
}

}  // namespace

std::array<double, kEdaFeatureCount> eda_features(std::span<const double> segment, double sample_rate,
                                                  const PeakOptions& opts) {
    if (segment.size() < 4)
        throw Error(ErrorKind::InsufficientData, "EDA window needs at least 4 samples, got " +
                                                     std::to_string(segment.size()));
    const Moments m = moments(segment);
    const auto peaks = detect_peaks(segment, sample_rate, opts);
    double amp = 0.0, dur = 0.0;
    for (const Peak& p : peaks) {
        amp += p.amplitude;
        dur += p.duration();
    }
    return {m.mean, m.stddev, m.min, m.max, m.kurtosis, m.skewness, static_cast<double>(peaks.size()), amp, dur};
}

std::array<double, kHrFeatureCount> hr_features(std::span<const double> segment) {
    if (segment.size() < 2)
        throw Error(ErrorKind::InsufficientData, "HR window needs at least 2 samples, got " +
                                                     std::to_string(segment.size()));
    const Moments m = moments(segment);
    double ss = 0.0;
    for (std::size_t i = 1; i < segment.size(); ++i) {
        const double diff = segment[i] - segment[i - 1];
        ss += diff * diff;
    }
    const double rmssd = std::sqrt(ss / static_cast<double>(segment.size() - 1));
    return {m.mean, m.stddev, m.min, m.max, rmssd};
}

StressLabel label_from_segments(double window_start, double window_duration,
                                std::span<const ConditionSegment> segments) {
    const double a = window_start, b = window_start + window_duration;
    std::map<Condition, double> cover;
    double total = 0.0;
    for (const auto& s : segments) {
        const double o = std::min(b, s.end) - std::max(a, s.start);
        if (o > 0.0) {
            cover[s.condition] += o;
            total += o;
        }
    }
    if (cover.empty()) throw Error(ErrorKind::Unlabeled, "window at " + std::to_string(a) + " s is outside all segments");
    if (total < window_duration - 1e-6)
        throw Error(ErrorKind::AnnotationGap, "window at " + std::to_string(a) + " s spans an annotation gap");
    const double half = 0.5 * window_duration;
    std::optional<Condition> majority;
    int at_least_half = 0;
    for (const auto& [cond, len] : cover) {
        if (len >= half - 1e-9) {
            ++at_least_half;
            majority = cond;
        }
    }
    if (at_least_half != 1)
        throw Error(ErrorKind::AmbiguousLabel, "window at " + std::to_string(a) + " s has no majority condition");
    switch (*majority) {
        case Condition::Rest: return StressLabel::L;
        case Condition::Highway: return StressLabel::M;
        case Condition::City: return StressLabel::H;
    }
    return StressLabel::L;
}

StressLabel label_from_score(double score, const ScoreThresholds& t) {
    if (!(score >= 0.0 && score <= 1.0)) throw Error(ErrorKind::InvalidScore, "score outside [0, 1]: " + std::to_string(score));
    if (score <= t.low) return StressLabel::L;
    if (score >= t.high) return StressLabel::H;
    return StressLabel::M;
}

std::vector<WindowInstance> balance_downsample(std::span<const WindowInstance> instances, std::uint64_t seed) {
    std::vector<std::size_t> low, high;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        switch (instances[i].label) {
            case StressLabel::L: low.push_back(i); break;
            case StressLabel::H: high.push_back(i); break;
            case StressLabel::M:
                throw Error(ErrorKind::InvalidParameter, "balance_downsample expects only L and H instances");
        }
    }
    if (low.empty() || high.empty())
        throw Error(ErrorKind::MissingClass, low.empty() ? "no L instances" : "no H instances");
    std::vector<std::size_t>& big = low.size() > high.size() ? low : high;
    const std::size_t target = std::min(low.size(), high.size());
    std::vector<bool> keep(instances.size(), true);
    if (big.size() > target) {
        Rng rng(seed);
        std::vector<std::size_t> order = big;
        rng.shuffle(order);
        for (std::size_t k = target; k < order.size(); ++k) keep[order[k]] = false;
    }
    std::vector<WindowInstance> out;
    out.reserve(2 * target);
    for (std::size_t i = 0; i < instances.size(); ++i)
        if (keep[i]) out.push_back(instances[i]);
    return out;
}

}  // namespace stressmkl
