#include "stressmkl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "stressmkl/error.hpp"
#include "stressmkl/rng.hpp"

namespace stressmkl {

FeatureScaler FeatureScaler::fit(std::span<const WindowInstance> instances) {
    if (instances.empty()) throw Error(ErrorKind::EmptyInput, "cannot fit a scaler on no instances");
    FeatureScaler s;
    s.min.fill(std::numeric_limits<double>::infinity());
    s.max.fill(-std::numeric_limits<double>::infinity());
    for (const auto& w : instances) {
        const auto f = w.features();
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            s.min[i] = std::min(s.min[i], f[i]);
            s.max[i] = std::max(s.max[i], f[i]);
        }
    }
    return s;
}

WindowInstance FeatureScaler::apply(const WindowInstance& w) const {
    WindowInstance out = w;
    auto scale = [&](double v, std::size_t i) {
        const double range = max[i] - min[i];
        return range > 0.0 ? (v - min[i]) / range : 0.0;
    };
    for (std::size_t i = 0; i < kEdaFeatureCount; ++i) out.eda[i] = scale(w.eda[i], i);
    for (std::size_t i = 0; i < kHrFeatureCount; ++i) out.hr[i] = scale(w.hr[i], kEdaFeatureCount + i);
    return out;
}

std::vector<WindowInstance> FeatureScaler::apply(std::span<const WindowInstance> ws) const {
    std::vector<WindowInstance> out;
    out.reserve(ws.size());
    for (const auto& w : ws) out.push_back(apply(w));
    return out;
}

std::vector<std::size_t> FoldPlan::members(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::complement(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] != fold) out.push_back(i);
    return out;
}

FoldPlan make_folds(std::span<const int> labels, int n_folds, std::uint64_t seed) {
    if (n_folds < 2) throw Error(ErrorKind::InvalidParameter, "need at least 2 folds");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (const auto& [label, idx] : by_class) {
        if (static_cast<int>(idx.size()) < n_folds)
            throw Error(ErrorKind::Stratification, "class " + std::to_string(label) + " has " +
                                                       std::to_string(idx.size()) + " instances, fewer than " +
                                                       std::to_string(n_folds) + " folds");
    }
    FoldPlan plan;
    plan.n_folds = n_folds;
    plan.seed = seed;
    plan.fold_of.assign(labels.size(), -1);
    Rng rng(seed);
    int next = 0;
    for (auto& [label, idx] : by_class) {
        rng.shuffle(idx);
        for (std::size_t i : idx) {
            plan.fold_of[i] = next;
            next = (next + 1) % n_folds;
        }
    }
    return plan;
}

FoldPlan make_group_folds(std::span<const std::string> drive_ids, int n_folds, std::uint64_t seed) {
    if (n_folds < 2) throw Error(ErrorKind::InvalidParameter, "need at least 2 folds");
    std::vector<std::string> drives(drive_ids.begin(), drive_ids.end());
    std::sort(drives.begin(), drives.end());
    drives.erase(std::unique(drives.begin(), drives.end()), drives.end());
    if (static_cast<int>(drives.size()) < n_folds)
        throw Error(ErrorKind::Stratification, std::to_string(drives.size()) + " drives, fewer than " +
                                                   std::to_string(n_folds) + " folds");
    Rng rng(seed);
    rng.shuffle(drives);
    std::map<std::string, int> fold_of_drive;
    for (std::size_t i = 0; i < drives.size(); ++i) fold_of_drive[drives[i]] = static_cast<int>(i % n_folds);
    FoldPlan plan;
    plan.n_folds = n_folds;
    plan.seed = seed;
    for (const auto& d : drive_ids) plan.fold_of.push_back(fold_of_drive.at(d));
    return plan;
}

Metrics compute_metrics(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size())
        throw Error(ErrorKind::Shape, std::to_string(predictions.size()) + " predictions for " +
                                          std::to_string(labels.size()) + " labels");
    Metrics m;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pred = predictions[i] > 0, truth = labels[i] > 0;
        if (pred && truth) ++m.confusion.tp;
        else if (pred && !truth) ++m.confusion.fp;
        else if (!pred && truth) ++m.confusion.fn;
        else ++m.confusion.tn;
    }
    const auto& c = m.confusion;
    m.accuracy = labels.empty() ? 0.0 : static_cast<double>(c.tp + c.tn) / static_cast<double>(labels.size());
    if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / (c.tp + c.fp);
    else m.degenerate = true;
    if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / (c.tp + c.fn);
    else m.degenerate = true;
    if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else m.degenerate = true;
    return m;
}

std::string to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::LogRegL1: return "logreg-l1";
        case ModelFamily::LogRegL2: return "logreg-l2";
        case ModelFamily::StkLinear: return "stk-linear";
        case ModelFamily::StkRbf: return "stk-rbf";
        case ModelFamily::MtMkl: return "mtmkl";
    }
    return "?";
}

ModelFamily parse_model_family(const std::string& text) {
    for (auto f : {ModelFamily::LogRegL1, ModelFamily::LogRegL2, ModelFamily::StkLinear, ModelFamily::StkRbf,
                   ModelFamily::MtMkl})
        if (to_string(f) == text) return f;
    throw Error(ErrorKind::InvalidParameter,
                "unknown model '" + text + "' (expected logreg-l1, logreg-l2, stk-linear, stk-rbf, mtmkl)");
}

bool UsageLog::disjoint_from(const std::set<std::uint64_t>& held_out) const {
    for (const auto& [stage, keys] : stages)
        for (auto k : keys)
            if (held_out.contains(k)) return false;
    return true;
}

namespace {

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

bool uses_gamma(const ExperimentConfig& cfg) {
    return cfg.family == ModelFamily::StkRbf || (cfg.family == ModelFamily::MtMkl && cfg.kernel == KernelKind::Rbf);
}

}  // namespace

std::vector<HyperParams> grid_points(const ExperimentConfig& cfg) {
    const auto Cs = sorted_unique(cfg.grid.C);
    const auto nus = cfg.family == ModelFamily::MtMkl ? sorted_unique(cfg.grid.nu) : std::vector<double>{0.0};
    const auto gammas = uses_gamma(cfg) ? sorted_unique(cfg.grid.gamma) : std::vector<double>{0.0};
    if (Cs.empty() || nus.empty() || gammas.empty()) throw Error(ErrorKind::InvalidParameter, "empty hyperparameter grid");
    std::vector<HyperParams> out;
    for (double C : Cs)
        for (double nu : nus)
            for (double g : gammas) out.push_back({C, nu, g});
    return out;
}

std::vector<Matrix> instance_views(std::span<const WindowInstance> ws) {
    const auto n = static_cast<Eigen::Index>(ws.size());
    Matrix eda(n, static_cast<Eigen::Index>(kEdaFeatureCount)), hr(n, static_cast<Eigen::Index>(kHrFeatureCount));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& w = ws[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < kEdaFeatureCount; ++j) eda(i, static_cast<Eigen::Index>(j)) = w.eda[j];
        for (std::size_t j = 0; j < kHrFeatureCount; ++j) hr(i, static_cast<Eigen::Index>(j)) = w.hr[j];
    }
    return {eda, hr};
}

Matrix instance_matrix(std::span<const WindowInstance> ws) {
    Matrix X(static_cast<Eigen::Index>(ws.size()), static_cast<Eigen::Index>(kFeatureCount));
    for (std::size_t i = 0; i < ws.size(); ++i) {
        const auto f = ws[i].features();
        for (std::size_t j = 0; j < kFeatureCount; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[j];
    }
    return X;
}

Vector instance_labels(std::span<const WindowInstance> ws) {
    Vector y(static_cast<Eigen::Index>(ws.size()));
    for (std::size_t i = 0; i < ws.size(); ++i) y[static_cast<Eigen::Index>(i)] = to_binary(ws[i].label);
    return y;
}

namespace {

KernelSpec kernel_for(KernelKind kind, double gamma) {
    return kind == KernelKind::Linear ? KernelSpec::linear() : KernelSpec::rbf(gamma);
}

Vector feature_row(const WindowInstance& w) {
    const auto f = w.features();
    Vector v(static_cast<Eigen::Index>(kFeatureCount));
    for (std::size_t i = 0; i < kFeatureCount; ++i) v[static_cast<Eigen::Index>(i)] = f[i];
    return v;
}

}  // namespace

TrainedModel train_model(std::span<const WindowInstance> train_raw, const HyperParams& hp, const ExperimentConfig& cfg,
                         const TaskAssignment* fixed, UsageLog* log, GramCache* cache,
                         std::optional<ClusteringResult>* clustering) {
    TrainedModel model;
    model.family = cfg.family;
    model.hp = hp;
    model.scaler = FeatureScaler::fit(train_raw);
    if (log)
        for (const auto& w : train_raw) log->record("scaling", w.key());
    const auto train = model.scaler.apply(train_raw);
    const Vector y = instance_labels(train);

    switch (cfg.family) {
        case ModelFamily::LogRegL1:
        case ModelFamily::LogRegL2: {
            if (log)
                for (const auto& w : train_raw) log->record("training", w.key());
            const Penalty p = cfg.family == ModelFamily::LogRegL1 ? Penalty::L1 : Penalty::L2;
            model.logreg = logreg_fit(instance_matrix(train), y, p, 1.0 / hp.C, cfg.logreg);
            return model;
        }
        case ModelFamily::StkLinear:
        case ModelFamily::StkRbf: {
            if (log)
                for (const auto& w : train_raw) log->record("training", w.key());
            const KernelSpec spec =
                kernel_for(cfg.family == ModelFamily::StkLinear ? KernelKind::Linear : KernelKind::Rbf, hp.gamma);
            model.stk = single_task_kernel_fit(instance_matrix(train), y, spec, hp.C, cache);
            return model;
        }
        case ModelFamily::MtMkl: break;
    }

    TaskAssignment assignment;
    if (fixed) {
        if (fixed->tasks != cfg.tasks)
            throw Error(ErrorKind::InvalidParameter, "assignment has " + std::to_string(fixed->tasks) +
                                                         " tasks, model expects " + std::to_string(cfg.tasks));
        assignment = *fixed;
    } else {
        ClusteringOptions copts = cfg.clustering;
        copts.tasks = cfg.tasks;
        ClusteringResult cl = assign_tasks(train, copts);
        if (log) {
            for (std::size_t i = 0; i < train.size(); ++i) {
                if (train[i].label == StressLabel::H) log->record("profiles", train_raw[i].key());
                log->record("clustering", train_raw[i].key());
            }
        }
        assignment = cl.assignment;
        if (clustering) *clustering = std::move(cl);
    }

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(cfg.tasks));
    for (std::size_t i = 0; i < train.size(); ++i)
        members[static_cast<std::size_t>(assignment.task(train[i].drive_id))].push_back(i);
    model.task_centroids = Matrix::Zero(cfg.tasks, static_cast<Eigen::Index>(kFeatureCount));
    std::vector<TaskData> tasks;
    for (int t = 0; t < cfg.tasks; ++t) {
        const auto& idx = members[static_cast<std::size_t>(t)];
        if (idx.empty()) throw Error(ErrorKind::InsufficientData, "task " + std::to_string(t + 1) + " has no training windows");
        std::vector<WindowInstance> ws;
        for (std::size_t i : idx) {
            ws.push_back(train[i]);
            model.task_centroids.row(t) += feature_row(train[i]).transpose();
            if (log) log->record("training", train_raw[i].key());
        }
        model.task_centroids.row(t) /= static_cast<double>(idx.size());
        tasks.push_back({instance_views(ws), instance_labels(ws)});
    }

    MtMklConfig mcfg = cfg.mtmkl;
    mcfg.C = hp.C;
    mcfg.nu = hp.nu;
    mcfg.reg = cfg.reg;
    mcfg.kernel = kernel_for(cfg.kernel, hp.gamma);
    model.mtmkl = mtmkl_train(tasks, mcfg, cache);
    model.mtmkl->assignment = assignment;
    return model;
}

ModelOutput model_predict(const TrainedModel& model, std::span<const WindowInstance> raw, bool route_unknown,
                          GramCache* cache) {
    ModelOutput out;
    const auto test = model.scaler.apply(raw);
    auto finish = [&](const Vector& scores) {
        out.scores.assign(scores.data(), scores.data() + scores.size());
        for (double s : out.scores) out.labels.push_back(decision_label(s));
    };
    if (model.logreg) {
        const auto pred = logreg_predict(*model.logreg, instance_matrix(test));
        out.labels = pred.labels;
        out.scores.assign(pred.probabilities.data(), pred.probabilities.data() + pred.probabilities.size());
        return out;
    }
    if (model.stk) {
        finish(single_task_kernel_scores(*model.stk, instance_matrix(test), cache));
        return out;
    }
    if (!model.mtmkl) throw Error(ErrorKind::InvalidParameter, "model holds no fitted learner");
    const MtMklModel& mt = *model.mtmkl;
    const int T = static_cast<int>(mt.tasks.size());

    // unknown drives: nearest task centroid of the drive's label-free mean
    std::map<std::string, int> routed;
    {
        std::map<std::string, std::pair<Vector, int>> sums;
        for (const auto& w : test) {
            if (mt.assignment.contains(w.drive_id)) continue;
            auto& [sum, count] = sums.try_emplace(w.drive_id, Vector::Zero(kFeatureCount), 0).first->second;
            sum += feature_row(w);
            ++count;
        }
        for (const auto& [drive, acc] : sums) {
            if (!route_unknown) throw Error(ErrorKind::UnassignedDrive, "drive '" + drive + "' has no task");
            const Vector mean = acc.first / static_cast<double>(acc.second);
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int t = 0; t < T; ++t) {
                const double d = (model.task_centroids.row(t).transpose() - mean).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = t;
                }
            }
            routed[drive] = best;
            out.routed_drives.push_back(drive);
        }
    }
    auto task_of = [&](const std::string& d) {
        auto it = routed.find(d);
        return it != routed.end() ? it->second : mt.assignment.task(d);
    };

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(T));
    for (std::size_t i = 0; i < test.size(); ++i) members[static_cast<std::size_t>(task_of(test[i].drive_id))].push_back(i);
    Vector scores(static_cast<Eigen::Index>(test.size()));
    for (int t = 0; t < T; ++t) {
        const auto& idx = members[static_cast<std::size_t>(t)];
        if (idx.empty()) continue;
        std::vector<WindowInstance> ws;
        for (std::size_t i : idx) ws.push_back(test[i]);
        const Vector s = mtmkl_task_scores(mt, static_cast<std::size_t>(t), instance_views(ws), cache);
        for (std::size_t k = 0; k < idx.size(); ++k)
            scores[static_cast<Eigen::Index>(idx[k])] = s[static_cast<Eigen::Index>(k)];
    }
    finish(scores);
    return out;
}

FitOutcome fit_and_predict(std::span<const WindowInstance> train, std::span<const WindowInstance> test,
                           const HyperParams& hp, const ExperimentConfig& cfg, UsageLog* log, GramCache* cache) {
    FitOutcome out;
    const TrainedModel model = train_model(train, hp, cfg, nullptr, log, cache, &out.clustering);
    const ModelOutput pred = model_predict(model, test, cfg.group_by_drive, cache);
    out.predictions = pred.labels;
    out.scores = pred.scores;
    out.scaler = model.scaler;
    if (model.logreg) out.converged = model.logreg->converged;
    if (model.mtmkl) {
        for (const auto& tm : model.mtmkl->tasks) out.etas.push_back(tm.eta.weights());
        out.converged = model.mtmkl->converged;
    }
    return out;
}

namespace {

template <typename Idx>
std::vector<WindowInstance> gather(std::span<const WindowInstance> all, const Idx& idx) {
    std::vector<WindowInstance> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(all[i]);
    return out;
}

std::vector<int> binary_labels(std::span<const WindowInstance> ws) {
    std::vector<int> out;
    for (const auto& w : ws) out.push_back(to_binary(w.label));
    return out;
}

FoldPlan plan_for(std::span<const WindowInstance> ws, int n_folds, std::uint64_t seed, bool by_drive) {
    if (by_drive) {
        std::vector<std::string> drives;
        for (const auto& w : ws) drives.push_back(w.drive_id);
        return make_group_folds(drives, n_folds, seed);
    }
    const auto labels = binary_labels(ws);
    return make_folds(labels, n_folds, seed);
}

}  // namespace

GridSearchResult grid_search(std::span<const WindowInstance> train, const ExperimentConfig& cfg, std::uint64_t seed,
                             UsageLog* log) {
    GridSearchResult result;
    const auto points = grid_points(cfg);
    if (points.size() == 1) {
        result.best = points.front();
        result.points.push_back({points.front(), 0.0, false, "single grid point, not evaluated"});
        return result;
    }
    const FoldPlan plan = plan_for(train, cfg.n_inner, seed, cfg.group_by_drive);
    std::vector<std::vector<WindowInstance>> fold_train, fold_val;
    for (int f = 0; f < cfg.n_inner; ++f) {
        fold_train.push_back(gather(train, plan.complement(f)));
        fold_val.push_back(gather(train, plan.members(f)));
    }
    if (log)
        for (const auto& w : train) log->record("grid_search", w.key());

    // Gram matrices repeat across C and nu for a fixed (fold, gamma)
    std::vector<GramCache> caches(static_cast<std::size_t>(cfg.n_inner));
    double best_acc = -1.0;
    for (std::size_t p = 0; p < points.size(); ++p) {
        GridPointResult gp;
        gp.hp = points[p];
        double total = 0.0;
        try {
            for (int f = 0; f < cfg.n_inner; ++f) {
                const auto out = fit_and_predict(fold_train[static_cast<std::size_t>(f)],
                                                 fold_val[static_cast<std::size_t>(f)], gp.hp, cfg, nullptr,
                                                 &caches[static_cast<std::size_t>(f)]);
                const auto labels = binary_labels(fold_val[static_cast<std::size_t>(f)]);
                total += compute_metrics(out.predictions, labels).accuracy;
            }
            gp.mean_accuracy = total / cfg.n_inner;
        } catch (const Error& e) {
            gp.failed = true;
            gp.failure = e.what();
            gp.mean_accuracy = 0.0;
        }
        if (gp.mean_accuracy > best_acc) {
            best_acc = gp.mean_accuracy;
            result.best = gp.hp;
        }
        result.points.push_back(std::move(gp));
    }
    return result;
}

std::vector<WindowInstance> assemble_binary(std::span<const WindowInstance> instances, std::uint64_t seed) {
    std::vector<WindowInstance> binary;
    for (const auto& w : instances)
        if (w.label != StressLabel::M) binary.push_back(w);
    return balance_downsample(binary, seed);
}

namespace {

void verify_profiles(const std::vector<WindowInstance>& scaled_train, const ClusteringResult& cl, int fold) {
    std::map<std::string, std::vector<WindowInstance>> high;
    for (const auto& w : scaled_train)
        if (w.label == StressLabel::H) high[w.drive_id].push_back(w);
    for (const auto& p : cl.profiles) {
        const ProfileVector again = profile_vector(high.at(p.drive_id));
        if (again.p != p.p)
            throw Error(ErrorKind::InvalidParameter,
                        "fold " + std::to_string(fold) + ": profile of drive '" + p.drive_id +
                            "' differs from one recomputed on the training split");
    }
}

}  // namespace

CvReport run_experiment(std::span<const WindowInstance> dataset, const ExperimentConfig& cfg) {
    if (dataset.empty()) throw Error(ErrorKind::EmptyInput, "empty dataset");
    for (const auto& w : dataset)
        if (w.label == StressLabel::M) throw Error(ErrorKind::InvalidParameter, "dataset must be binary (L/H only)");
    CvReport report;
    report.config = cfg;
    const FoldPlan outer = plan_for(dataset, cfg.n_outer, cfg.seed, cfg.group_by_drive);
    bool all_clean = true;
    for (int f = 0; f < cfg.n_outer; ++f) {
        const auto train = gather(dataset, outer.complement(f));
        const auto test = gather(dataset, outer.members(f));
        std::set<std::uint64_t> held_out;
        for (const auto& w : test) held_out.insert(w.key());

        FoldReport fr;
        fr.fold = f;
        fr.n_train = train.size();
        fr.n_test = test.size();
        UsageLog log;
        try {
            const auto gs = grid_search(train, cfg, derive_seed(cfg.seed, static_cast<std::uint64_t>(f) + 1), &log);
            fr.selected = gs.best;
            fr.grid = gs.points;
            GramCache cache;
            const auto out = fit_and_predict(train, test, gs.best, cfg, &log, &cache);
            if (!(out.scaler.min == FeatureScaler::fit(train).min && out.scaler.max == FeatureScaler::fit(train).max))
                throw Error(ErrorKind::InvalidParameter, "scaler statistics do not match the training split");
            if (out.clustering) {
                verify_profiles(out.scaler.apply(train), *out.clustering, f);
                fr.assignment = out.clustering->assignment;
                fr.fallback_drives = out.clustering->fallback_drives;
            }
            fr.metrics = compute_metrics(out.predictions, binary_labels(test));
            fr.etas = out.etas;
            fr.converged = out.converged;
        } catch (const Error& e) {
            rethrow_with_context(e, "outer fold " + std::to_string(f));
        }
        fr.leakage_check = log.disjoint_from(held_out);
        if (!fr.leakage_check) all_clean = false;
        report.folds.push_back(std::move(fr));
    }
    const double n = static_cast<double>(report.folds.size());
    for (const auto& fr : report.folds) {
        report.mean_accuracy += fr.metrics.accuracy;
        report.mean_precision += fr.metrics.precision;
        report.mean_recall += fr.metrics.recall;
        report.mean_f1 += fr.metrics.f1;
    }
    report.mean_accuracy /= n;
    report.mean_precision /= n;
    report.mean_recall /= n;
    report.mean_f1 /= n;
    report.leakage_check = all_clean;
    if (!all_clean) throw Error(ErrorKind::InvalidParameter, "leakage check failed: a test instance was used in training");
    return report;
}

}  // namespace stressmkl
