#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "scratch_dir.hpp"
#include "stressmkl/config.hpp"
#include "stressmkl/error.hpp"
#include "stressmkl/io.hpp"
#include "stressmkl/serialize.hpp"
#include "stressmkl/svg.hpp"
#include "stressmkl/synth.hpp"

using namespace stressmkl;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Io;
}

}  // namespace

TEST_CASE("doubles round-trip through text") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) CHECK(parse_double(format_double(v), "v") == v);
    CHECK(kind_of([] { (void)parse_double("1.2x", "v"); }) == ErrorKind::Schema);
    CHECK(kind_of([] { (void)parse_double("", "v"); }) == ErrorKind::Schema);
}

TEST_CASE("csv reading") {
    ScratchDir dir("csv");
    write_text(dir / "a.csv", "\xEF\xBB\xBF" "a, \"b\" ,c\n1,2,3\n\n4, 5 ,6\n");
    const auto t = read_csv(dir / "a.csv");
    CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][1] == "5");
    CHECK(t.column("c") == 2u);
    CHECK_FALSE(t.column("d").has_value());

    write_text(dir / "bad.csv", "a,b\n1\n");
    CHECK(kind_of([&] { (void)read_csv(dir / "bad.csv"); }) == ErrorKind::Schema);
    CHECK(kind_of([&] { (void)read_csv(dir / "missing.csv"); }) == ErrorKind::Io);
}

TEST_CASE("schema diff names missing and unexpected columns") {
    try {
        require_columns({"time_s", "value"}, {"time", "value", "extra"}, "trace.csv");
        FAIL("expected a schema error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Schema);
        const std::string msg = e.what();
        CHECK(msg.find("time_s") != std::string::npos);
        CHECK(msg.find("extra") != std::string::npos);
    }
    CHECK_NOTHROW(require_columns({"a"}, {"a", "b"}, "x", true));
}

TEST_CASE("instances round-trip with their header sidecar") {
    ScratchDir dir("inst");
    TwoProfileOptions opts;
    opts.drives = 3;
    opts.windows_per_drive = 4;
    auto ws = synth_two_profile(opts).instances;
    ws[1].label = StressLabel::M;
    write_instances(dir / "instances.csv", ws, "demo");
    CHECK(std::filesystem::exists(dir / "instances.header.json"));
    const auto back = read_instances(dir / "instances.csv");
    REQUIRE(back.size() == ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i) {
        CHECK(back[i].key() == ws[i].key());
        CHECK(back[i].label == ws[i].label);
        CHECK(back[i].dataset_id == "demo");
    }

    auto header = parse_json(read_file(dir / "instances.header.json"), "header");
    header["features"][3]["name"] = "eda_median";
    write_text(dir / "instances.header.json", dump(header));
    CHECK(kind_of([&] { (void)read_instances(dir / "instances.csv"); }) == ErrorKind::Schema);
}

TEST_CASE("traces, segments and scores round-trip") {
    ScratchDir dir("trace");
    SignalTrace t;
    t.drive_id = "d";
    t.sample_rate = 4.0;
    t.times = {0.0, 0.25, 0.5};
    t.values = {1.5, 1.25, 1.0};
    write_trace_csv(dir / "t.csv", t);
    const auto back = read_trace_csv(dir / "t.csv", "d", Modality::EDA, 4.0);
    CHECK(back.times == t.times);
    CHECK(back.values == t.values);

    const std::vector<ConditionSegment> seg{{0, 10, Condition::Rest}, {10, 20, Condition::City}};
    write_segments_csv(dir / "s.csv", seg);
    const auto sback = read_segments_csv(dir / "s.csv");
    REQUIRE(sback.size() == 2);
    CHECK(sback[1].condition == Condition::City);
    CHECK(sback[1].end == 20.0);

    write_text(dir / "bad_seg.csv", "start_s,end_s,condition\n0,10,parking\n");
    CHECK_THROWS_AS(read_segments_csv(dir / "bad_seg.csv"), Error);
}

TEST_CASE("drivedb markers become the fixed condition schedule") {
    std::vector<double> times, marker;
    for (int k = 0; k < 700; ++k) {
        times.push_back(k);
        marker.push_back(k % 100 == 50 && k < 600 ? 1.0 : 0.0);
    }
    const auto seg = segments_from_markers(times, marker, 700.0);
    REQUIRE(seg.size() == 7);
    CHECK(seg[0].condition == Condition::Rest);
    CHECK(seg[1].condition == Condition::City);
    CHECK(seg[2].condition == Condition::Highway);
    CHECK(seg[6].condition == Condition::Rest);
    CHECK(seg[0].end == 50.0);
    CHECK(seg[6].end == 700.0);

    marker[250] = 0.0;
    CHECK(kind_of([&] { (void)segments_from_markers(times, marker, 700.0); }) == ErrorKind::Schema);
}

TEST_CASE("manifests resolve relative paths and reject duplicates") {
    ScratchDir dir("manifest");
    TraceDatasetOptions opts;
    opts.drives = 2;
    const auto path = write_trace_dataset(dir.path(), opts);
    const auto m = load_manifest(path);
    REQUIRE(m.drives.size() == 2);
    CHECK(m.drives[0].eda.is_absolute());
    const auto raw = load_drive(m, m.drives[0]);
    CHECK(raw.eda.size() > 0);
    CHECK(!raw.segments.empty());

    auto j = parse_json(read_file(path), "manifest");
    j["drives"][1]["drive_id"] = j["drives"][0]["drive_id"];
    write_text(dir / "dup.json", dump(j));
    CHECK(kind_of([&] { (void)load_manifest(dir / "dup.json"); }) == ErrorKind::Schema);
}

TEST_CASE("config text parsing") {
    const auto cfg = parse_config("# comment\nmodel = logreg-l1\ntasks = 3\ngrid_C = 0.1, 1\nbalance = false\n");
    CHECK(cfg.experiment.family == ModelFamily::LogRegL1);
    CHECK(cfg.experiment.tasks == 3);
    CHECK(cfg.experiment.grid.C == std::vector<double>{0.1, 1.0});
    CHECK_FALSE(cfg.balance);
    CHECK(kind_of([] { (void)parse_config("no_such_key = 1\n"); }) == ErrorKind::InvalidParameter);
    CHECK(kind_of([] { (void)parse_config("tasks = two\n"); }) == ErrorKind::InvalidParameter);

    // canonical text parses back to the same canonical text
    CHECK(to_text(parse_config(to_text(cfg))) == to_text(cfg));
    for (const auto& key : config_keys()) CHECK(to_text(cfg).find(key + " = ") != std::string::npos);
}

TEST_CASE("assignment json round-trip uses 1-based tasks") {
    TaskAssignment a;
    a.tasks = 2;
    a.task_of = {{"d1", 0}, {"d2", 1}};
    const auto j = assignment_to_json(a, {"d2"}, 9);
    CHECK(j["assignment"]["d2"] == 2);
    CHECK(assignment_from_json(j).task_of == a.task_of);
    auto bad = j;
    bad["assignment"]["d1"] = 3;
    CHECK_THROWS_AS(assignment_from_json(bad), Error);
}

TEST_CASE("xml escaping") {
    CHECK(xml_escape("a<b & \"c\">'") == "a&lt;b &amp; &quot;c&quot;&gt;&apos;");
}
