#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "stressmkl/commands.hpp"
#include "stressmkl/error.hpp"

namespace fs = std::filesystem;
using namespace stressmkl;

namespace {

struct ModelFlags {
    std::string model, kernel, reg;
    int tasks = 0;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
    cmd->add_option("--model", f.model, "logreg-l1, logreg-l2, stk-linear, stk-rbf or mtmkl")
        ->check(CLI::IsMember({"logreg-l1", "logreg-l2", "stk-linear", "stk-rbf", "mtmkl"}));
    cmd->add_option("--tasks", f.tasks, "number of drive profiles T")->check(CLI::PositiveNumber);
    cmd->add_option("--kernel", f.kernel, "linear or rbf")->check(CLI::IsMember({"linear", "rbf"}));
    cmd->add_option("--reg", f.reg, "l1 or l2 cross-task regularizer")->check(CLI::IsMember({"l1", "l2"}));
}

void apply_model_flags(PipelineConfig& cfg, const ModelFlags& f) {
    if (!f.model.empty()) apply_setting(cfg, "model", f.model);
    if (f.tasks > 0) cfg.experiment.tasks = f.tasks;
    if (!f.kernel.empty()) apply_setting(cfg, "kernel", f.kernel);
    if (!f.reg.empty()) apply_setting(cfg, "reg", f.reg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driver stress detection from EDA and HR: feature extraction, drive profiling and multi-task "
                 "multiple kernel learning."};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> settings;
    app.add_option("--config", config_path, "flat key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "random seed (overrides the config)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--set", settings, "extra key=value setting, repeatable");

    std::string manifest, instances, assignment, model_file;
    std::vector<std::string> reports;
    ModelFlags flags;
    SynthCommand synth;
    std::string annotation = "segments";
    bool no_swap = false;

    auto* extract = app.add_subcommand("extract", "signals -> windowed, labeled feature instances");
    extract->add_option("--manifest", manifest, "dataset manifest (JSON)")->required()->check(CLI::ExistingFile);

    auto* profile = app.add_subcommand("profile", "cluster drives into T profiles");
    profile->add_option("--instances", instances, "instances CSV")->required()->check(CLI::ExistingFile);
    profile->add_option("--tasks", flags.tasks, "number of profiles T")->check(CLI::PositiveNumber);

    auto* train = app.add_subcommand("train", "fit a model on all instances");
    train->add_option("--instances", instances, "instances CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--assignment", assignment, "assignment.json from `profile` (mtmkl)")->check(CLI::ExistingFile);
    add_model_flags(train, flags);

    auto* evaluate = app.add_subcommand("evaluate", "nested cross-validation");
    evaluate->add_option("--instances", instances, "instances CSV")->required()->check(CLI::ExistingFile);
    add_model_flags(evaluate, flags);

    auto* predict = app.add_subcommand("predict", "score instances with a trained model");
    predict->add_option("--model-file", model_file, "model.json from `train`")->required()->check(CLI::ExistingFile);
    predict->add_option("--instances", instances, "instances CSV")->required()->check(CLI::ExistingFile);

    auto* report = app.add_subcommand("report", "summary table and kernel-weight plots over CV reports");
    report->add_option("reports", reports, "cv_report.json files")->required()->check(CLI::ExistingFile);

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    synth_cmd->add_option("--kind", synth.kind, "instances or traces")->check(CLI::IsMember({"instances", "traces"}));
    synth_cmd->add_option("--drives", synth.instances.drives, "number of drives")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--windows", synth.instances.windows_per_drive, "windows per drive (instances)")
        ->check(CLI::Range(2, 100000));
    synth_cmd->add_option("--annotation", annotation, "segments or score (traces)")
        ->check(CLI::IsMember({"segments", "score"}));
    synth_cmd->add_flag("--no-swap", no_swap, "every drive informative in the EDA view (instances)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
        for (const auto& s : settings) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw Error(ErrorKind::InvalidParameter, "--set expects key=value");
            apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
        }
        if (seed) cfg.experiment.seed = *seed;
        apply_model_flags(cfg, flags);
        const fs::path out(out_dir);

        if (*extract) {
            const auto r = cmd_extract(manifest, cfg, out);
            std::size_t failed = 0;
            for (const auto& d : r.drives) failed += d.error ? 1 : 0;
            std::printf("extracted %zu instances from %zu drives (%zu failed)\n", r.instances.size(),
                        r.drives.size() - failed, failed);
        } else if (*profile) {
            const auto cl = cmd_profile(instances, cfg, out);
            std::printf("assigned %zu drives to %d tasks (%zu by fallback)\n", cl.assignment.task_of.size(),
                        cl.assignment.tasks, cl.fallback_drives.size());
        } else if (*train) {
            const auto m = cmd_train(instances, assignment.empty() ? std::nullopt : std::optional<fs::path>(assignment),
                                     cfg, out);
            std::printf("trained %s (C = %g, nu = %g, gamma = %g)\n", to_string(m.family).c_str(), m.hp.C, m.hp.nu,
                        m.hp.gamma);
        } else if (*evaluate) {
            const auto r = cmd_evaluate(instances, cfg, out);
            std::printf("%s: accuracy %.4f  precision %.4f  recall %.4f  F1 %.4f over %zu folds\n",
                        to_string(r.config.family).c_str(), r.mean_accuracy, r.mean_precision, r.mean_recall,
                        r.mean_f1, r.folds.size());
        } else if (*predict) {
            const auto p = cmd_predict(model_file, instances, out);
            std::printf("scored %zu instances\n", p.labels.size());
        } else if (*report) {
            std::vector<fs::path> paths(reports.begin(), reports.end());
            std::cout << cmd_report(paths, out);
        } else if (*synth_cmd) {
            synth.instances.seed = cfg.experiment.seed;
            synth.instances.swap_profiles = !no_swap;
            synth.traces.seed = cfg.experiment.seed;
            synth.traces.drives = synth.instances.drives;
            synth.traces.annotation = annotation == "score" ? AnnotationKind::Score : AnnotationKind::Segments;
            cmd_synth(synth, out);
            std::printf("wrote synthetic %s to %s\n", synth.kind.c_str(), out.string().c_str());
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
