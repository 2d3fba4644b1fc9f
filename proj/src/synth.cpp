#include "stressmkl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "stressmkl/error.hpp"
#include "stressmkl/rng.hpp"

namespace fs = std::filesystem;

namespace stressmkl {

double Startle::half_recovery_duration() const { return rise_s + tau_s * std::log(2.0); }

std::vector<double> startle_signal(double sample_rate, double duration_s, double baseline,
                                   std::span<const Startle> startles) {
    const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
    std::vector<double> x(n, baseline);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / sample_rate;
        for (const auto& s : startles) {
            const double dt = t - s.onset;
            if (dt <= 0.0) continue;
            if (dt <= s.rise_s) x[k] += s.amplitude * dt / s.rise_s;
            else x[k] += s.amplitude * std::exp(-(dt - s.rise_s) / s.tau_s);
        }
    }
    return x;
}

namespace {

std::string drive_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "d%02d", i + 1);
    return buf;
}

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

SynthInstances synth_two_profile(const TwoProfileOptions& o) {
    if (o.drives < 1 || o.windows_per_drive < 2)
        throw Error(ErrorKind::InvalidParameter, "need at least one drive and two windows per drive");
    SynthInstances out;
    Rng rng(o.seed);
    for (int d = 0; d < o.drives; ++d) {
        const std::string id = drive_name(d);
        const int profile = o.swap_profiles ? d % 2 : 0;
        out.profile_of[id] = profile;
        std::vector<StressLabel> labels;
        for (int k = 0; k < o.windows_per_drive; ++k) labels.push_back(k % 2 ? StressLabel::H : StressLabel::L);
        rng.shuffle(labels);
        for (int k = 0; k < o.windows_per_drive; ++k) {
            WindowInstance w;
            w.dataset_id = "synthetic";
            w.drive_id = id;
            w.start = 15.0 * k;
            w.label = labels[static_cast<std::size_t>(k)];
            const double informative = w.label == StressLabel::H ? o.high : o.low;
            const double nuisance = rng.bernoulli(0.5) ? o.high : o.low;
            const double eda_center = profile == 0 ? informative : nuisance;
            const double hr_center = profile == 0 ? nuisance : informative;
            for (auto& v : w.eda) v = clip01(rng.normal(eda_center, o.sd));
            for (auto& v : w.hr) v = clip01(rng.normal(hr_center, o.sd));
            out.instances.push_back(std::move(w));
        }
    }
    return out;
}

std::vector<WindowInstance> synth_random_labels(int drives, int windows_per_drive, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<WindowInstance> out;
    for (int d = 0; d < drives; ++d) {
        std::vector<StressLabel> labels;
        for (int k = 0; k < windows_per_drive; ++k) labels.push_back(k % 2 ? StressLabel::H : StressLabel::L);
        rng.shuffle(labels);
        for (int k = 0; k < windows_per_drive; ++k) {
            WindowInstance w;
            w.dataset_id = "random";
            w.drive_id = drive_name(d);
            w.start = 15.0 * k;
            w.label = labels[static_cast<std::size_t>(k)];
            for (auto& v : w.eda) v = rng.uniform();
            for (auto& v : w.hr) v = rng.uniform();
            out.push_back(std::move(w));
        }
    }
    return out;
}

namespace {

struct DriveSignals {
    SignalTrace eda;
    SignalTrace hr;
};

// Tonic drift plus startles whose rate and size grow with the condition's
// stress level; HR steps with the same level.
DriveSignals drive_signals(const std::string& id, std::span<const ConditionSegment> schedule, double eda_rate,
                           double hr_rate, double eda_gain, double hr_gain, Rng& rng) {
    const double end = schedule.back().end;
    auto level = [&](double t) {
        for (const auto& s : schedule)
            if (t >= s.start && t < s.end)
                return s.condition == Condition::City ? 1.0 : s.condition == Condition::Highway ? 0.5 : 0.0;
        return 0.0;
    };
    std::vector<Startle> startles;
    for (double t = 2.0; t < end - 2.0;) {
        const double lv = level(t);
        const double gap = (lv > 0.75 ? 8.0 : lv > 0.25 ? 20.0 : 45.0) * rng.uniform(0.6, 1.4);
        startles.push_back({t, eda_gain * (0.2 + 0.6 * lv) * rng.uniform(0.8, 1.2), 1.0, 3.0});
        t += gap;
    }
    DriveSignals out;
    out.eda.drive_id = out.hr.drive_id = id;
    out.eda.modality = Modality::EDA;
    out.hr.modality = Modality::HR;
    out.eda.sample_rate = eda_rate;
    out.hr.sample_rate = hr_rate;
    auto eda = startle_signal(eda_rate, end, 2.0, startles);
    for (std::size_t k = 0; k < eda.size(); ++k) {
        const double t = static_cast<double>(k) / eda_rate;
        out.eda.times.push_back(t);
        out.eda.values.push_back(eda[k] + 0.2 * std::sin(2.0 * M_PI * t / 600.0) + rng.normal(0.0, 0.005));
    }
    const auto n_hr = static_cast<std::size_t>(std::llround(end * hr_rate));
    for (std::size_t k = 0; k < n_hr; ++k) {
        const double t = static_cast<double>(k) / hr_rate;
        out.hr.times.push_back(t);
        out.hr.values.push_back(70.0 + hr_gain * 20.0 * level(t) + rng.normal(0.0, 1.5 + 2.0 * level(t)));
    }
    return out;
}

}  // namespace

fs::path write_trace_dataset(const fs::path& dir, const TraceDatasetOptions& o) {
    if (o.drives < 1) throw Error(ErrorKind::InvalidParameter, "need at least one drive");
    Rng rng(o.seed);
    Manifest m;
    m.dataset_id = "synthetic-traces";
    m.adapter = Adapter::Generic;
    const std::vector<Condition> order{Condition::Rest, Condition::Highway, Condition::City, Condition::Highway,
                                       Condition::Rest};
    auto score_of = [](Condition c) { return c == Condition::City ? 0.9 : c == Condition::Highway ? 0.5 : 0.1; };
    for (int d = 0; d < o.drives; ++d) {
        const std::string id = drive_name(d);
        std::vector<ConditionSegment> schedule;
        for (std::size_t k = 0; k < order.size(); ++k)
            schedule.push_back({o.segment_s * static_cast<double>(k), o.segment_s * static_cast<double>(k + 1), order[k]});
        const bool eda_responder = d % 2 == 0;
        const auto sig = drive_signals(id, schedule, o.eda_rate, o.hr_rate, eda_responder ? 1.0 : 0.3,
                                       eda_responder ? 0.3 : 1.0, rng);
        DriveEntry e;
        e.drive_id = id;
        e.eda = dir / (id + "_eda.csv");
        e.hr = dir / (id + "_hr.csv");
        e.eda_rate = o.eda_rate;
        e.hr_rate = o.hr_rate;
        e.annotation_kind = o.annotation;
        write_trace_csv(e.eda, sig.eda);
        write_trace_csv(e.hr, sig.hr);
        if (o.annotation == AnnotationKind::Segments) {
            e.annotation = dir / (id + "_segments.csv");
            write_segments_csv(e.annotation, schedule);
        } else {
            e.annotation = dir / (id + "_scores.csv");
            std::vector<ScoreSample> scores;
            for (const auto& s : schedule)
                for (double t = s.start; t < s.end; t += 1.0) scores.push_back({t, score_of(s.condition)});
            write_scores_csv(e.annotation, scores);
        }
        m.drives.push_back(e);
    }
    const fs::path manifest = dir / "manifest.json";
    write_manifest(manifest, m);
    return manifest;
}

RawDrive synth_constant_drive(const std::string& drive_id, double duration_s, double eda_rate, double hr_rate,
                              Condition condition, std::uint64_t seed) {
    Rng rng(seed);
    const std::vector<ConditionSegment> schedule{{0.0, duration_s, condition}};
    const auto sig = drive_signals(drive_id, schedule, eda_rate, hr_rate, 1.0, 1.0, rng);
    RawDrive d;
    d.eda = sig.eda;
    d.hr = sig.hr;
    d.segments = schedule;
    d.annotation_kind = AnnotationKind::Segments;
    return d;
}

}  // namespace stressmkl
