#include "stressmkl/commands.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>

#include "stressmkl/error.hpp"
#include "stressmkl/rng.hpp"
#include "stressmkl/serialize.hpp"
#include "stressmkl/svg.hpp"

namespace fs = std::filesystem;

namespace stressmkl {
namespace {

constexpr double kTimeEps = 1e-9;

ExperimentConfig effective(const PipelineConfig& cfg) {
    ExperimentConfig e = cfg.experiment;
    e.clustering.tasks = e.tasks;
    e.clustering.seed = derive_seed(e.seed, 0xC1);
    return e;
}

std::vector<WindowInstance> training_set(const std::vector<WindowInstance>& all, const PipelineConfig& cfg) {
    if (cfg.balance) return assemble_binary(all, derive_seed(cfg.experiment.seed, 0xBA));
    std::vector<WindowInstance> out;
    for (const auto& w : all)
        if (w.label != StressLabel::M) out.push_back(w);
    return out;
}

bool overlaps(const std::vector<Gap>& gaps, double s, double e) {
    for (const auto& g : gaps)
        if (g.begin < e - kTimeEps && g.end > s + kTimeEps) return true;
    return false;
}

double window_score(const std::vector<ScoreSample>& scores, double s, double e) {
    double sum = 0.0;
    int n = 0;
    for (const auto& x : scores) {
        if (x.time >= s - kTimeEps && x.time < e - kTimeEps) {
            sum += x.score;
            ++n;
        }
    }
    if (n == 0) throw Error(ErrorKind::Unlabeled, "no score samples in window");
    return sum / n;
}

}  // namespace

DriveExtraction extract_drive(const RawDrive& raw, const std::string& dataset_id, const PipelineConfig& cfg) {
    DriveExtraction out;
    out.drive_id = raw.eda.drive_id;
    const SignalTrace eda = preprocess(raw.eda, cfg.preprocess);
    const SignalTrace hr = preprocess(raw.hr, cfg.preprocess);
    out.gaps = eda.gaps;
    out.gaps.insert(out.gaps.end(), hr.gaps.begin(), hr.gaps.end());

    const auto windows = slide_windows(eda, hr, cfg.window_s, cfg.overlap);
    // windows slide_windows skipped for gaps
    const double stride = cfg.window_s * (1.0 - cfg.overlap);
    const double t0 = std::max(eda.start_time(), hr.start_time());
    const double t_end = std::min(eda.end_time(), hr.end_time());
    for (std::size_t k = 0;; ++k) {
        const double s = t0 + static_cast<double>(k) * stride;
        if (s + cfg.window_s > t_end + kTimeEps) break;
        if (overlaps(eda.gaps, s, s + cfg.window_s) || overlaps(hr.gaps, s, s + cfg.window_s))
            out.dropped.push_back({s, "overlaps a signal gap"});
    }

    for (const auto& seg : windows) {
        try {
            WindowInstance w;
            w.dataset_id = dataset_id;
            w.drive_id = out.drive_id;
            w.start = seg.start;
            w.duration = seg.duration;
            if (raw.annotation_kind == AnnotationKind::Segments) {
                w.label = label_from_segments(seg.start, seg.duration, raw.segments);
            } else {
                const double score = window_score(raw.scores, seg.start, seg.start + seg.duration);
                w.score = score;
                w.label = label_from_score(score, cfg.score_thresholds);
            }
            w.eda = eda_features(seg.eda, seg.eda_rate, cfg.peaks);
            w.hr = hr_features(seg.hr);
            out.instances.push_back(std::move(w));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::InvalidScore) throw;
            out.dropped.push_back({seg.start, e.what()});
        }
    }
    std::sort(out.dropped.begin(), out.dropped.end(),
              [](const DropRecord& a, const DropRecord& b) { return a.start < b.start; });
    return out;
}

ExtractResult cmd_extract(const fs::path& manifest_path, const PipelineConfig& cfg, const fs::path& out) {
    const Manifest manifest = load_manifest(manifest_path);
    ExtractResult result;
    int ok = 0;
    for (const auto& entry : manifest.drives) {
        try {
            const RawDrive raw = load_drive(manifest, entry);
            DriveExtraction d = extract_drive(raw, manifest.dataset_id, cfg);
            d.drive_id = entry.drive_id;
            result.instances.insert(result.instances.end(), d.instances.begin(), d.instances.end());
            result.drives.push_back(std::move(d));
            ++ok;
        } catch (const Error& e) {
            DriveExtraction d;
            d.drive_id = entry.drive_id;
            d.error = e.what();
            result.drives.push_back(std::move(d));
        }
    }

    Json log;
    log["format"] = "stressmkl-extraction-log";
    log["version"] = 1;
    log["dataset_id"] = manifest.dataset_id;
    log["config"] = to_text(cfg);
    Json drives = Json::array();
    for (const auto& d : result.drives) {
        Json j{{"drive_id", d.drive_id}, {"status", d.error ? "error" : "ok"}};
        if (d.error) j["error"] = *d.error;
        j["instances"] = d.instances.size();
        Json dropped = Json::array();
        for (const auto& r : d.dropped) dropped.push_back({{"start_s", r.start}, {"reason", r.reason}});
        j["dropped"] = dropped;
        Json gaps = Json::array();
        for (const auto& g : d.gaps) gaps.push_back({{"begin_s", g.begin}, {"end_s", g.end}});
        j["gaps"] = gaps;
        drives.push_back(j);
    }
    log["drives"] = drives;
    log["total_instances"] = result.instances.size();
    atomic_write(out / "extraction_log.json", dump(log));
    if (ok == 0) throw Error(ErrorKind::InsufficientData, "no drive could be extracted (see extraction_log.json)");
    write_instances(out / "instances.csv", result.instances, manifest.dataset_id);
    return result;
}

ClusteringResult cmd_profile(const fs::path& instances_path, const PipelineConfig& cfg, const fs::path& out) {
    const auto all = read_instances(instances_path);
    if (all.empty()) throw Error(ErrorKind::EmptyInput, instances_path.string() + ": no instances");
    const ExperimentConfig e = effective(cfg);
    const auto scaled = FeatureScaler::fit(all).apply(all);
    ClusteringResult cl = assign_tasks(scaled, e.clustering);

    std::string csv = "drive_id";
    for (std::size_t i = 1; i <= kFeatureCount; ++i) csv += ",p" + std::to_string(i);
    csv += "\n";
    for (const auto& p : cl.profiles) {
        csv += p.drive_id;
        for (Eigen::Index i = 0; i < p.p.size(); ++i) csv += "," + format_double(p.p[i]);
        csv += "\n";
    }
    atomic_write(out / "profiles.csv", csv);
    atomic_write(out / "assignment.json", dump(assignment_to_json(cl.assignment, cl.fallback_drives, e.seed)));
    atomic_write(out / "similarity.svg", similarity_svg(cl));
    return cl;
}

TrainedModel cmd_train(const fs::path& instances_path, const std::optional<fs::path>& assignment_path,
                       const PipelineConfig& cfg, const fs::path& out) {
    const ExperimentConfig e = effective(cfg);
    const auto data = training_set(read_instances(instances_path), cfg);
    std::optional<TaskAssignment> fixed;
    if (assignment_path) {
        fixed = assignment_from_json(parse_json(read_file(*assignment_path), assignment_path->string()));
        for (const auto& w : data)
            if (!fixed->contains(w.drive_id))
                throw Error(ErrorKind::UnassignedDrive, "drive '" + w.drive_id + "' missing from " +
                                                            assignment_path->string());
    }
    const auto points = grid_points(e);
    const HyperParams hp = points.size() == 1 ? points.front() : grid_search(data, e, derive_seed(e.seed, 0x7A)).best;
    GramCache cache;
    TrainedModel model = train_model(data, hp, e, fixed ? &*fixed : nullptr, nullptr, &cache);
    atomic_write(out / "model.json", dump(to_json(model, e)));
    return model;
}

ModelOutput cmd_predict(const fs::path& model_path, const fs::path& instances_path, const fs::path& out) {
    const TrainedModel model = model_from_json(parse_json(read_file(model_path), model_path.string()));
    const auto data = read_instances(instances_path);
    const ModelOutput pred = model_predict(model, data, true);
    std::string csv = "drive_id,start_s,label,score\n";
    for (std::size_t i = 0; i < data.size(); ++i)
        csv += data[i].drive_id + "," + format_double(data[i].start) + "," + (pred.labels[i] > 0 ? "H" : "L") + "," +
               format_double(pred.scores[i]) + "\n";
    atomic_write(out / "predictions.csv", csv);
    return pred;
}

CvReport cmd_evaluate(const fs::path& instances_path, const PipelineConfig& cfg, const fs::path& out) {
    const ExperimentConfig e = effective(cfg);
    const auto data = training_set(read_instances(instances_path), cfg);
    const CvReport report = run_experiment(data, e);
    atomic_write(out / "cv_report.json", dump(report_to_json(report)));
    atomic_write(out / "eta_heatmap.svg", eta_heatmap_svg(report));
    return report;
}

std::string cmd_report(const std::vector<fs::path>& paths, const fs::path& out) {
    if (paths.empty()) throw Error(ErrorKind::InvalidParameter, "no reports given");
    std::string md = "| report | model | T | folds | accuracy | precision | recall | F1 |\n";
    md += "|---|---|---|---|---|---|---|---|\n";
    std::string csv = "report,model,tasks,folds,accuracy,precision,recall,f1\n";
    auto f4 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const CvReport r = report_from_json(parse_json(read_file(paths[i]), paths[i].string()));
        const std::string name = paths[i].parent_path().filename().string() + "/" + paths[i].filename().string();
        const std::string model = to_string(r.config.family);
        const std::string tasks = r.config.family == ModelFamily::MtMkl ? std::to_string(r.config.tasks) : "-";
        md += "| " + name + " | " + model + " | " + tasks + " | " + std::to_string(r.folds.size()) + " | " +
              f4(r.mean_accuracy) + " | " + f4(r.mean_precision) + " | " + f4(r.mean_recall) + " | " +
              f4(r.mean_f1) + " |\n";
        csv += name + "," + model + "," + tasks + "," + std::to_string(r.folds.size()) + "," +
               format_double(r.mean_accuracy) + "," + format_double(r.mean_precision) + "," +
               format_double(r.mean_recall) + "," + format_double(r.mean_f1) + "\n";
        if (r.config.family == ModelFamily::MtMkl)
            atomic_write(out / ("eta_heatmap_" + std::to_string(i + 1) + ".svg"), eta_heatmap_svg(r));
    }
    atomic_write(out / "summary.md", md);
    atomic_write(out / "summary.csv", csv);
    return md;
}

void cmd_synth(const SynthCommand& cmd, const fs::path& out) {
    if (cmd.kind == "instances") {
        const auto s = synth_two_profile(cmd.instances);
        write_instances(out / "instances.csv", s.instances, "synthetic");
        Json truth = Json::object();
        for (const auto& [drive, p] : s.profile_of) truth[drive] = p + 1;
        atomic_write(out / "truth.json", dump({{"profile_of", truth}, {"seed", cmd.instances.seed}}));
    } else if (cmd.kind == "traces") {
        write_trace_dataset(out, cmd.traces);
    } else {
        throw Error(ErrorKind::InvalidParameter, "unknown synth kind '" + cmd.kind + "' (expected instances, traces)");
    }
}

}  // namespace stressmkl
