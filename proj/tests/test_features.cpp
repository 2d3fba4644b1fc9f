#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "stressmkl/error.hpp"
#include "stressmkl/features.hpp"
#include "stressmkl/rng.hpp"
#include "stressmkl/synth.hpp"

using namespace stressmkl;

namespace {

SignalTrace trace_of(double seconds, double fs, Modality m) {
    SignalTrace t;
    t.drive_id = "d";
    t.modality = m;
    t.sample_rate = fs;
    for (int k = 0; k < static_cast<int>(seconds * fs); ++k) {
        t.times.push_back(k / fs);
        t.values.push_back(0.5 + 0.1 * std::sin(k / fs));
    }
    return t;
}

std::vector<double> starts(double seconds) {
    const auto ws = slide_windows(trace_of(seconds, 4.0, Modality::EDA), trace_of(seconds, 1.0, Modality::HR), 30.0, 0.5);
    std::vector<double> out;
    for (const auto& w : ws) out.push_back(w.start);
    return out;
}

}  // namespace

TEST_CASE("window counts follow the stride and containment rules") {
    CHECK(starts(60.0) == std::vector<double>{0, 15, 30});
    CHECK(starts(30.0) == std::vector<double>{0});
    CHECK(starts(44.0) == std::vector<double>{0});
    CHECK(starts(120.0) == std::vector<double>{0, 15, 30, 45, 60, 75, 90});
}

TEST_CASE("windows carry the samples they cover") {
    const auto ws = slide_windows(trace_of(60.0, 4.0, Modality::EDA), trace_of(60.0, 1.0, Modality::HR), 30.0, 0.5);
    for (const auto& w : ws) {
        CHECK(w.eda.size() == 120);
        CHECK(w.hr.size() == 30);
    }
}

TEST_CASE("windows overlapping a gap are skipped") {
    auto eda = trace_of(120.0, 4.0, Modality::EDA);
    eda.gaps.push_back({50.0, 52.0});
    const auto ws = slide_windows(eda, trace_of(120.0, 1.0, Modality::HR), 30.0, 0.5);
    std::vector<double> s;
    for (const auto& w : ws) s.push_back(w.start);
    CHECK(s == std::vector<double>{0, 15, 60, 75, 90});
}

TEST_CASE("constant segment features") {
    const std::vector<double> x(40, 0.3);
    const auto f = eda_features(x, 4.0);
    CHECK(f[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(f[1] == 0.0);
    CHECK(f[2] == 0.3);
    CHECK(f[3] == 0.3);
    CHECK(f[4] == 0.0);
    CHECK(f[5] == 0.0);
    CHECK(f[6] == 0.0);
    CHECK(f[7] == 0.0);
    CHECK(f[8] == 0.0);
}

TEST_CASE("moments of [0, 0.5, 1, 0.5]") {
    const std::vector<double> x{0, 0.5, 1, 0.5};
    const auto f = eda_features(x, 4.0);
    const auto m = oracle::moments(x);
    CHECK(std::abs(f[0] - 0.5) <= 1e-9);
    CHECK(std::abs(f[1] - std::sqrt(0.125)) <= 1e-9);
    CHECK(std::abs(f[1] - 0.3536) <= 1e-4);
    CHECK(f[2] == 0.0);
    CHECK(f[3] == 1.0);
    CHECK(std::abs(f[4] - m.kurt) <= 1e-9);
    CHECK(std::abs(f[5] - m.skew) <= 1e-9);
}

TEST_CASE("moments agree with the long-double oracle on random segments") {
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x;
        for (int i = 0; i < 120; ++i) x.push_back(rng.uniform() * rng.uniform());
        const auto f = eda_features(x, 4.0);
        const auto m = oracle::moments(x);
        CHECK(std::abs(f[0] - m.mean) <= 1e-9);
        CHECK(std::abs(f[1] - m.sd) <= 1e-9);
        CHECK(std::abs(f[4] - m.kurt) <= 1e-9);
        CHECK(std::abs(f[5] - m.skew) <= 1e-9);
    }
}

TEST_CASE("short EDA windows are rejected") {
    const std::vector<double> x{0.1, 0.2, 0.3};
    CHECK_THROWS_AS(eda_features(x, 4.0), Error);
}

TEST_CASE("rmssd examples") {
    const std::vector<double> constant(30, 0.4), a{0.60, 0.62, 0.61}, alt{0, 1, 0, 1};
    CHECK(hr_features(constant)[4] == 0.0);
    CHECK(std::abs(hr_features(a)[4] - std::sqrt((0.02 * 0.02 + 0.01 * 0.01) / 2)) <= 1e-9);
    CHECK(std::abs(hr_features(a)[4] - 0.015811) <= 1e-6);
    CHECK(std::abs(hr_features(alt)[4] - 1.0) <= 1e-12);
    Rng rng(5);
    std::vector<double> x;
    for (int i = 0; i < 30; ++i) x.push_back(rng.uniform());
    CHECK(std::abs(hr_features(x)[4] - oracle::rmssd(x)) <= 1e-12);
}

TEST_CASE("ramp then plateau gives one peak of the ramp height") {
    const double fs = 16.0;
    std::vector<double> x;
    for (int k = 0; k < 10 * 16; ++k) {
        const double t = k / fs;
        x.push_back(t < 2.0 ? 0.1 * t : 0.2);
    }
    const auto peaks = detect_peaks(x, fs, {});
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].amplitude == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("monotonically decreasing segment has no peaks") {
    std::vector<double> x;
    for (int k = 0; k < 200; ++k) x.push_back(1.0 - 0.004 * k);
    CHECK(detect_peaks(x, 4.0, {}).empty());
}

TEST_CASE("single planted startle is recovered") {
    const double fs = 32.0;
    const Startle s{5.0, 0.3, 1.0, 3.0};
    const auto x = startle_signal(fs, 30.0, 0.2, std::span(&s, 1));
    const auto peaks = detect_peaks(x, fs, {});
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].amplitude == doctest::Approx(0.3).epsilon(0.01));
    const double expected = oracle::startle_half_recovery(1.0, 3.0);
    CHECK(std::abs(peaks[0].duration() - expected) <= 0.05 * expected);
    CHECK(peaks[0].onset == doctest::Approx(5.0).epsilon(0.02));
}

TEST_CASE("two separated startles come back in temporal order") {
    const double fs = 16.0;
    const std::vector<Startle> s{{3.0, 0.3, 1.0, 2.0}, {18.0, 0.2, 1.0, 2.0}};
    const auto peaks = detect_peaks(startle_signal(fs, 30.0, 0.1, s), fs, {});
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0].onset < peaks[1].onset);
    CHECK(peaks[0].amplitude == doctest::Approx(0.3).epsilon(0.02));
    CHECK(peaks[1].amplitude == doctest::Approx(0.2).epsilon(0.02));
}

TEST_CASE("segment labels") {
    const std::vector<ConditionSegment> seg{{0, 100, Condition::Rest}, {100, 200, Condition::Highway},
                                            {200, 300, Condition::City}};
    CHECK(label_from_segments(10, 30, seg) == StressLabel::L);
    CHECK(label_from_segments(120, 30, seg) == StressLabel::M);
    CHECK(label_from_segments(250, 30, seg) == StressLabel::H);
    CHECK(label_from_segments(180, 30, seg) == StressLabel::M);  // 20 s highway, 10 s city
    try {
        label_from_segments(85, 30, seg);  // 15 s rest, 15 s highway
        FAIL("expected an ambiguous label");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::AmbiguousLabel);
    }
    const std::vector<ConditionSegment> holey{{0, 100, Condition::Rest}, {110, 200, Condition::Rest}};
    try {
        label_from_segments(95, 30, holey);
        FAIL("expected an annotation gap");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::AnnotationGap);
    }
}

TEST_CASE("score labels") {
    CHECK(label_from_score(0.20) == StressLabel::L);
    CHECK(label_from_score(0.80) == StressLabel::H);
    CHECK(label_from_score(0.50) == StressLabel::M);
    CHECK(label_from_score(0.33) == StressLabel::L);
    CHECK(label_from_score(0.67) == StressLabel::H);
    CHECK(label_from_score(0.0) == StressLabel::L);
    CHECK(label_from_score(1.0) == StressLabel::H);
    CHECK_THROWS_AS(label_from_score(1.2), Error);
    CHECK_THROWS_AS(label_from_score(-0.1), Error);
}

namespace {

std::vector<WindowInstance> labeled(int l, int h) {
    std::vector<WindowInstance> out;
    for (int i = 0; i < l + h; ++i) {
        WindowInstance w;
        w.drive_id = "d";
        w.start = 15.0 * i;
        w.label = i < l ? StressLabel::L : StressLabel::H;
        out.push_back(w);
    }
    return out;
}

}  // namespace

TEST_CASE("balancing downsamples the majority class") {
    const auto out = balance_downsample(labeled(10, 4), 1);
    int l = 0, h = 0;
    for (const auto& w : out) (w.label == StressLabel::L ? l : h)++;
    CHECK(l == 4);
    CHECK(h == 4);
    for (std::size_t i = 1; i < out.size(); ++i) CHECK(out[i - 1].start < out[i].start);

    const auto same = balance_downsample(labeled(5, 5), 1);
    CHECK(same.size() == 10);

    const auto again = balance_downsample(labeled(10, 4), 1);
    REQUIRE(again.size() == out.size());
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].start == out[i].start);
}

TEST_CASE("instance keys depend on drive, start and features") {
    WindowInstance a;
    a.drive_id = "d1";
    WindowInstance b = a;
    CHECK(a.key() == b.key());
    b.start = 15.0;
    CHECK(a.key() != b.key());
    b = a;
    b.hr[4] = 1e-300;
    CHECK(a.key() != b.key());
    b = a;
    b.drive_id = "d2";
    CHECK(a.key() != b.key());
}

TEST_CASE("binary mapping") {
    CHECK(to_binary(StressLabel::H) == 1);
    CHECK(to_binary(StressLabel::L) == -1);
    CHECK_THROWS_AS(to_binary(StressLabel::M), Error);
}
