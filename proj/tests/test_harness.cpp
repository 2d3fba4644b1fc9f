#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "stressmkl/error.hpp"
#include "stressmkl/harness.hpp"
#include "stressmkl/serialize.hpp"
#include "stressmkl/synth.hpp"

using namespace stressmkl;

namespace {

ExperimentConfig single_point(ModelFamily family, int tasks = 1) {
    ExperimentConfig cfg;
    cfg.family = family;
    cfg.tasks = tasks;
    cfg.grid.C = {1.0};
    cfg.grid.nu = {1e-4};
    cfg.grid.gamma = {1.0};
    cfg.seed = 3;
    return cfg;
}

std::vector<WindowInstance> view_separable(int drives, int windows, std::uint64_t seed) {
    TwoProfileOptions opts;
    opts.drives = drives;
    opts.windows_per_drive = windows;
    opts.swap_profiles = false;
    opts.seed = seed;
    return synth_two_profile(opts).instances;
}

}  // namespace

TEST_CASE("stratified folds") {
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) labels.push_back(i % 2 ? 1 : -1);
    const auto plan = make_folds(labels, 10, 5);
    for (int f = 0; f < 10; ++f) {
        const auto m = plan.members(f);
        REQUIRE(m.size() == 2);
        CHECK(labels[m[0]] != labels[m[1]]);
        CHECK(plan.complement(f).size() == 18);
    }
    CHECK(make_folds(labels, 10, 5).fold_of == plan.fold_of);
    CHECK(make_folds(labels, 10, 6).fold_of != plan.fold_of);

    std::vector<int> seen(20, 0);
    for (int f = 0; f < 10; ++f)
        for (auto i : plan.members(f)) ++seen[i];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

    const std::vector<int> uneven{1, 1, 1, -1, -1, -1, -1, -1, -1, -1, 1};
    const auto p = make_folds(uneven, 3, 1);
    std::vector<std::size_t> sizes;
    for (int f = 0; f < 3; ++f) sizes.push_back(p.members(f).size());
    CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);

    try {
        (void)make_folds(std::vector<int>{1, 1, -1, -1, -1}, 3, 1);
        FAIL("expected a stratification error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Stratification);
    }
}

TEST_CASE("group folds keep drives whole") {
    std::vector<std::string> ids;
    for (int d = 0; d < 7; ++d)
        for (int k = 0; k < 5; ++k) ids.push_back("d" + std::to_string(d));
    const auto plan = make_group_folds(ids, 3, 2);
    std::map<std::string, std::set<int>> folds_of;
    for (std::size_t i = 0; i < ids.size(); ++i) folds_of[ids[i]].insert(plan.fold_of[i]);
    for (const auto& [id, f] : folds_of) CHECK(f.size() == 1);
    CHECK_THROWS_AS(make_group_folds(ids, 8, 2), Error);
}

TEST_CASE("metrics examples") {
    const std::vector<int> truth{1, 1, -1, -1};
    const auto perfect = compute_metrics(truth, truth);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);
    CHECK_FALSE(perfect.degenerate);

    const std::vector<int> all_h{1, 1, 1, 1}, all_l{-1, -1, -1, -1};
    const auto h = compute_metrics(all_h, truth);
    CHECK(h.accuracy == 0.5);
    CHECK(h.precision == 0.5);
    CHECK(h.recall == 1.0);
    CHECK(h.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(h.confusion.tp == 2);
    CHECK(h.confusion.fp == 2);

    const auto l = compute_metrics(all_l, truth);
    CHECK(l.recall == 0.0);
    CHECK(l.f1 == 0.0);
    CHECK(l.degenerate);

    CHECK_THROWS_AS(compute_metrics(std::vector<int>{1}, truth), Error);
}

TEST_CASE("grid points are ordered for the tie-break") {
    ExperimentConfig cfg;
    cfg.family = ModelFamily::MtMkl;
    cfg.grid.C = {10.0, 1.0};
    cfg.grid.nu = {0.1, 0.01};
    cfg.grid.gamma = {1.0};
    const auto pts = grid_points(cfg);
    REQUIRE(pts.size() == 4);
    CHECK(pts[0] == HyperParams{1.0, 0.01, 1.0});
    CHECK(pts[1] == HyperParams{1.0, 0.1, 1.0});
    CHECK(pts[3] == HyperParams{10.0, 0.1, 1.0});
    cfg.kernel = KernelKind::Linear;
    CHECK(grid_points(cfg)[0].gamma == 0.0);
    cfg.family = ModelFamily::LogRegL2;
    CHECK(grid_points(cfg).size() == 2);
    cfg.family = ModelFamily::StkRbf;
    cfg.grid.gamma = {0.1, 1.0};
    CHECK(grid_points(cfg).size() == 4);
}

TEST_CASE("feature scaler") {
    std::vector<WindowInstance> ws(3);
    for (int i = 0; i < 3; ++i) {
        ws[i].eda[0] = 2.0 * i;
        ws[i].hr[4] = 7.0;
    }
    const auto s = FeatureScaler::fit(ws);
    const auto out = s.apply(ws);
    CHECK(out[1].eda[0] == 0.5);
    CHECK(out[2].eda[0] == 1.0);
    CHECK(out[1].hr[4] == 0.0);
    WindowInstance outside;
    outside.eda[0] = 8.0;
    CHECK(s.apply(outside).eda[0] == 2.0);
    CHECK_THROWS_AS(FeatureScaler::fit(std::vector<WindowInstance>{}), Error);
}

TEST_CASE("binary assembly drops M and balances") {
    std::vector<WindowInstance> ws;
    for (int i = 0; i < 12; ++i) {
        WindowInstance w;
        w.drive_id = "d";
        w.start = 15.0 * i;
        w.label = i < 6 ? StressLabel::L : (i < 9 ? StressLabel::M : StressLabel::H);
        ws.push_back(w);
    }
    const auto b = assemble_binary(ws, 1);
    CHECK(b.size() == 6);
    for (const auto& w : b) CHECK(w.label != StressLabel::M);
}

TEST_CASE("grid search selection") {
    const auto data = view_separable(6, 20, 4);
    ExperimentConfig cfg;
    cfg.family = ModelFamily::LogRegL1;
    cfg.n_inner = 3;

    cfg.grid.C = {1.0};
    CHECK(grid_search(data, cfg, 1).best.C == 1.0);

    cfg.grid.C = {1e-4, 100.0};  // C = 1e-4 zeroes every weight
    const auto r = grid_search(data, cfg, 1);
    CHECK(r.best.C == 100.0);
    CHECK(r.points[1].mean_accuracy > r.points[0].mean_accuracy);

    cfg.grid.C = {1e-4, 1e-5};  // both constant predictors: exact tie
    const auto tie = grid_search(data, cfg, 1);
    CHECK(tie.points[0].mean_accuracy == tie.points[1].mean_accuracy);
    CHECK(tie.best.C == 1e-5);
}

TEST_CASE("failing grid points score zero and are flagged") {
    auto data = view_separable(4, 10, 2);
    ExperimentConfig cfg;
    cfg.family = ModelFamily::MtMkl;
    cfg.tasks = 3;
    cfg.n_inner = 2;
    cfg.grid.C = {1.0, 2.0};
    cfg.grid.nu = {1e-4};
    cfg.grid.gamma = {1.0};
    // two drives per inner split cannot be clustered into three tasks
    data.erase(std::remove_if(data.begin(), data.end(), [](const WindowInstance& w) { return w.drive_id > "d02"; }),
               data.end());
    const auto r = grid_search(data, cfg, 1);
    for (const auto& p : r.points) {
        CHECK(p.failed);
        CHECK(p.mean_accuracy == 0.0);
        CHECK_FALSE(p.failure.empty());
    }
}

TEST_CASE("usage log disjointness") {
    UsageLog log;
    log.record("scaling", 1);
    log.record("training", 2);
    CHECK(log.disjoint_from({3, 4}));
    CHECK_FALSE(log.disjoint_from({2}));
}

TEST_CASE("random labels give chance accuracy") {
    const auto data = synth_random_labels(10, 20, 8);
    for (auto family : {ModelFamily::LogRegL2, ModelFamily::StkRbf}) {
        const auto report = run_experiment(data, single_point(family));
        CHECK(report.leakage_check);
        CHECK(report.mean_accuracy >= 0.4);
        CHECK(report.mean_accuracy <= 0.6);
    }
}

TEST_CASE("view-separable data is learned by mtmkl") {
    const auto data = view_separable(8, 20, 5);
    const auto report = run_experiment(data, single_point(ModelFamily::MtMkl));
    CHECK(report.mean_accuracy >= 0.95);
    CHECK(report.leakage_check);
    REQUIRE(report.folds.size() == 10);
    for (const auto& f : report.folds) {
        CHECK(f.leakage_check);
        CHECK(f.n_train + f.n_test == data.size());
        CHECK(f.etas.size() == 1);
    }
}

TEST_CASE("reports are bitwise reproducible") {
    const auto data = view_separable(6, 10, 6);
    auto cfg = single_point(ModelFamily::MtMkl, 2);
    cfg.grid.C = {0.1, 1.0};
    cfg.n_outer = 5;
    cfg.n_inner = 3;
    const auto a = dump(report_to_json(run_experiment(data, cfg)));
    const auto b = dump(report_to_json(run_experiment(data, cfg)));
    CHECK(a == b);
    cfg.seed = 4;
    CHECK(dump(report_to_json(run_experiment(data, cfg))) != a);
}

TEST_CASE("grouped folds route unseen drives") {
    const auto data = view_separable(6, 10, 7);
    auto cfg = single_point(ModelFamily::MtMkl, 2);
    cfg.n_outer = 3;
    cfg.group_by_drive = true;
    const auto report = run_experiment(data, cfg);
    CHECK(report.leakage_check);
    for (const auto& f : report.folds) CHECK(f.n_test % 10 == 0);
}

TEST_CASE("experiments reject M windows") {
    auto data = view_separable(4, 10, 1);
    data[0].label = StressLabel::M;
    CHECK_THROWS_AS(run_experiment(data, single_point(ModelFamily::LogRegL2)), Error);
}

TEST_CASE("trained models predict raw instances") {
    const auto data = view_separable(6, 10, 9);
    const auto cfg = single_point(ModelFamily::MtMkl, 2);
    const auto model = train_model(data, {1.0, 1e-4, 1.0}, cfg);
    REQUIRE(model.mtmkl.has_value());
    CHECK(model.task_centroids.rows() == 2);
    const auto out = model_predict(model, data, false);
    REQUIRE(out.labels.size() == data.size());
    int correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) correct += out.labels[i] == to_binary(data[i].label);
    CHECK(correct >= static_cast<int>(data.size()) - 2);

    auto stranger = data[0];
    stranger.drive_id = "zz";
    const std::vector<WindowInstance> one{stranger};
    CHECK_THROWS_AS(model_predict(model, one, false), Error);
    const auto routed = model_predict(model, one, true);
    CHECK(routed.routed_drives == std::vector<std::string>{"zz"});

    const auto round = model_from_json(to_json(model, cfg));
    const auto again = model_predict(round, data, false);
    CHECK(again.scores == out.scores);
}
