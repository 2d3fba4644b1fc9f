#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "scratch_dir.hpp"
#include "stressmkl/commands.hpp"
#include "stressmkl/config.hpp"
#include "stressmkl/error.hpp"
#include "stressmkl/serialize.hpp"

using namespace stressmkl;
namespace fs = std::filesystem;

namespace {

// One drive of `seconds` with a single annotation covering it.
fs::path one_drive_dataset(const fs::path& dir, double seconds, AnnotationKind kind, double score) {
    const RawDrive raw = synth_constant_drive("d01", seconds, 4.0, 1.0, Condition::Rest, 3);
    write_trace_csv(dir / "eda.csv", raw.eda);
    write_trace_csv(dir / "hr.csv", raw.hr);
    DriveEntry e;
    e.drive_id = "d01";
    e.eda = "eda.csv";
    e.hr = "hr.csv";
    e.annotation_kind = kind;
    if (kind == AnnotationKind::Segments) {
        const std::vector<ConditionSegment> seg{{0.0, seconds, Condition::Rest}};
        write_segments_csv(dir / "seg.csv", seg);
        e.annotation = "seg.csv";
    } else {
        std::vector<ScoreSample> s;
        for (double t = 0.0; t < seconds; t += 1.0) s.push_back({t, score});
        write_scores_csv(dir / "score.csv", s);
        e.annotation = "score.csv";
    }
    Manifest m;
    m.dataset_id = "one";
    m.drives = {e};
    write_manifest(dir / "manifest.json", m);
    return dir / "manifest.json";
}

PipelineConfig unbalanced() {
    PipelineConfig cfg;
    cfg.balance = false;
    return cfg;
}

PipelineConfig quick(const std::string& model, int tasks) {
    PipelineConfig cfg;
    apply_setting(cfg, "model", model);
    apply_setting(cfg, "tasks", std::to_string(tasks));
    apply_setting(cfg, "grid_C", "1");
    apply_setting(cfg, "grid_nu", "0.0001");
    apply_setting(cfg, "grid_gamma", "1");
    apply_setting(cfg, "n_outer", "5");
    return cfg;
}

fs::path synth_instances(const fs::path& dir, int drives, int windows) {
    SynthCommand cmd;
    cmd.instances.drives = drives;
    cmd.instances.windows_per_drive = windows;
    cmd_synth(cmd, dir);
    return dir / "instances.csv";
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(STRESSMKL_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("120 s drive yields seven windows") {
    ScratchDir dir("extract");
    const auto manifest = one_drive_dataset(dir.path(), 120.0, AnnotationKind::Segments, 0.0);
    const auto r = cmd_extract(manifest, unbalanced(), dir.path());
    REQUIRE(r.instances.size() == 7);
    for (int k = 0; k < 7; ++k) {
        CHECK(r.instances[k].start == 15.0 * k);
        CHECK(r.instances[k].label == StressLabel::L);
    }
    CHECK(fs::exists(dir / "instances.csv"));
    CHECK(fs::exists(dir / "extraction_log.json"));
    CHECK(read_instances(dir / "instances.csv").size() == 7);
}

TEST_CASE("constant 0.9 score labels every window H") {
    ScratchDir dir("score");
    const auto manifest = one_drive_dataset(dir.path(), 120.0, AnnotationKind::Score, 0.9);
    const auto r = cmd_extract(manifest, unbalanced(), dir.path());
    REQUIRE(r.instances.size() == 7);
    for (const auto& w : r.instances) CHECK(w.label == StressLabel::H);
}

TEST_CASE("extraction fails only when no drive succeeds") {
    ScratchDir dir("fail");
    TraceDatasetOptions opts;
    opts.drives = 3;
    const auto manifest = write_trace_dataset(dir.path(), opts);
    auto m = load_manifest(manifest);
    std::ofstream(m.drives[1].eda) << "time_s,value\n0,bad\n";
    const auto r = cmd_extract(manifest, unbalanced(), dir / "out");
    CHECK(r.drives[1].error.has_value());
    CHECK_FALSE(r.drives[0].error.has_value());
    const auto log = parse_json(read_file(dir / "out" / "extraction_log.json"), "log");
    CHECK(log["drives"].size() == 3);

    for (const auto& d : m.drives) std::ofstream(d.eda) << "time_s,value\n0,bad\n";
    CHECK_THROWS_AS(cmd_extract(manifest, unbalanced(), dir / "out2"), Error);
}

TEST_CASE("profile recovers the two drive groups and is deterministic") {
    ScratchDir dir("profile");
    const auto inst = synth_instances(dir.path(), 8, 20);
    auto cfg = quick("mtmkl", 2);
    const auto r = cmd_profile(inst, cfg, dir / "a");
    const auto truth = parse_json(read_file(dir / "truth.json"), "truth");
    for (const auto& [drive, task] : r.assignment.task_of)
        for (const auto& [other, other_task] : r.assignment.task_of)
            CHECK((task == other_task) == (truth["profile_of"][drive] == truth["profile_of"][other]));
    (void)cmd_profile(inst, cfg, dir / "b");
    CHECK(read_file(dir / "a" / "assignment.json") == read_file(dir / "b" / "assignment.json"));
    CHECK(fs::exists(dir / "a" / "similarity.svg"));
    CHECK(fs::exists(dir / "a" / "profiles.csv"));

    const auto one = cmd_profile(inst, quick("mtmkl", 1), dir / "c");
    for (const auto& [drive, task] : one.assignment.task_of) CHECK(task == 0);

    try {
        (void)cmd_profile(inst, quick("mtmkl", 9), dir / "d");
        FAIL("expected an invalid-parameter error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidParameter);
    }
}

TEST_CASE("evaluate on view-separable data reaches high accuracy") {
    ScratchDir dir("eval");
    SynthCommand cmd;
    cmd.instances.drives = 8;
    cmd.instances.windows_per_drive = 20;
    cmd.instances.swap_profiles = false;
    cmd_synth(cmd, dir.path());
    const auto report = cmd_evaluate(dir / "instances.csv", quick("mtmkl", 1), dir.path());
    CHECK(report.mean_accuracy >= 0.95);
    const auto j = parse_json(read_file(dir / "cv_report.json"), "report");
    CHECK(j["mean"]["accuracy"].get<double>() == report.mean_accuracy);
    CHECK(fs::exists(dir / "eta_heatmap.svg"));
}

TEST_CASE("train then predict reproduces the in-model fit values") {
    ScratchDir dir("train");
    const auto inst = synth_instances(dir.path(), 6, 10);
    const auto model = cmd_train(inst, std::nullopt, quick("mtmkl", 1), dir.path());
    const auto pred = cmd_predict(dir / "model.json", inst, dir.path());
    const auto& task = model.mtmkl->tasks[0];
    const Vector fit = task.y - task.solution.alpha / task.solution.C;
    REQUIRE(static_cast<Eigen::Index>(pred.scores.size()) == fit.size());
    for (Eigen::Index i = 0; i < fit.size(); ++i) CHECK(pred.scores[i] == doctest::Approx(fit[i]).epsilon(1e-9));
    CHECK(read_csv(dir / "predictions.csv").rows.size() == pred.scores.size());
}

TEST_CASE("train honours an external assignment") {
    ScratchDir dir("assign");
    const auto inst = synth_instances(dir.path(), 6, 10);
    const auto cl = cmd_profile(inst, quick("mtmkl", 2), dir.path());
    const auto model = cmd_train(inst, dir / "assignment.json", quick("mtmkl", 2), dir.path());
    CHECK(model.mtmkl->assignment.task_of == cl.assignment.task_of);

    TaskAssignment partial = cl.assignment;
    partial.task_of.erase(partial.task_of.begin());
    atomic_write(dir / "partial.json", dump(assignment_to_json(partial, {}, 0)));
    try {
        (void)cmd_train(inst, dir / "partial.json", quick("mtmkl", 2), dir.path());
        FAIL("expected an unassigned-drive error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnassignedDrive);
    }
}

TEST_CASE("two models from one instances file give comparable reports") {
    ScratchDir dir("report");
    const auto inst = synth_instances(dir.path(), 8, 10);
    (void)cmd_evaluate(inst, quick("logreg-l2", 1), dir / "lr");
    (void)cmd_evaluate(inst, quick("mtmkl", 2), dir / "mt");
    const auto md = cmd_report({dir / "lr" / "cv_report.json", dir / "mt" / "cv_report.json"}, dir / "sum");
    CHECK(md.find("logreg-l2") != std::string::npos);
    CHECK(md.find("mtmkl") != std::string::npos);
    CHECK(read_csv(dir / "sum" / "summary.csv").rows.size() == 2);
}

TEST_CASE("header mismatch is a schema error") {
    ScratchDir dir("schema");
    const auto inst = synth_instances(dir.path(), 4, 10);
    std::string text = read_file(inst);
    text.replace(text.find("drive_id"), 8, "driver");
    atomic_write(inst, text);
    try {
        (void)cmd_evaluate(inst, quick("logreg-l2", 1), dir.path());
        FAIL("expected a schema error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Schema);
    }
}

TEST_CASE("binary exit codes") {
    ScratchDir dir("exit");
    const std::string out = " --out " + dir.path().string();
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("") == 1);
    CHECK(run_cli("train --model nonsense" + out) == 1);
    CHECK(run_cli("synth --kind instances --drives 4 --windows 10" + out) == 0);
    CHECK(fs::exists(dir / "instances.csv"));
    CHECK(run_cli("evaluate --instances " + (dir / "instances.csv").string() +
                  " --model logreg-l2 --set grid_C=1 --set n_outer=5" + out) == 0);
    CHECK(run_cli("profile --instances " + (dir / "missing.csv").string() + out) == 1);
    atomic_write(dir / "junk.csv", "a,b\n1,2\n");
    CHECK(run_cli("profile --instances " + (dir / "junk.csv").string() + out) == 2);
    CHECK(run_cli("profile --tasks 2 --set no_such_key=1 --instances " + (dir / "instances.csv").string() + out) == 1);
}
