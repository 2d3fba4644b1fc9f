#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stressmkl/baselines.hpp"
#include "stressmkl/clustering.hpp"
#include "stressmkl/features.hpp"
#include "stressmkl/mtmkl.hpp"

namespace stressmkl {

/// Per-column min-max scaling fitted on a training split. Constant columns
/// map to 0.
struct FeatureScaler {
    std::array<double, kFeatureCount> min{};
    std::array<double, kFeatureCount> max{};

    static FeatureScaler fit(std::span<const WindowInstance> instances);
    [[nodiscard]] WindowInstance apply(const WindowInstance& w) const;
    [[nodiscard]] std::vector<WindowInstance> apply(std::span<const WindowInstance> ws) const;
};

struct FoldPlan {
    int n_folds = 0;
    std::uint64_t seed = 0;
    std::vector<int> fold_of;  // instance index -> fold

    [[nodiscard]] std::vector<std::size_t> members(int fold) const;
    [[nodiscard]] std::vector<std::size_t> complement(int fold) const;
};

/// Stratified by label, seeded. Fold sizes differ by at most one.
FoldPlan make_folds(std::span<const int> labels, int n_folds, std::uint64_t seed);

/// Whole drives per fold (no drive appears in two folds).
FoldPlan make_group_folds(std::span<const std::string> drive_ids, int n_folds, std::uint64_t seed);

struct Confusion {
    int tp = 0, fp = 0, tn = 0, fn = 0;
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Confusion confusion;
    bool degenerate = false;  // a zero denominator was reported as 0
};

/// Labels are +1 (H, positive) or -1 (L).
Metrics compute_metrics(std::span<const int> predictions, std::span<const int> labels);

enum class ModelFamily { LogRegL1, LogRegL2, StkLinear, StkRbf, MtMkl };

std::string to_string(ModelFamily f);
ModelFamily parse_model_family(const std::string& text);

struct HyperParams {
    double C = 1.0;
    double nu = 0.0;
    double gamma = 0.0;

    bool operator==(const HyperParams&) const = default;
};

struct Grid {
    std::vector<double> C{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
    std::vector<double> nu{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
    std::vector<double> gamma{0.1, 1.0, 10.0};
};

struct ExperimentConfig {
    ModelFamily family = ModelFamily::MtMkl;
    int tasks = 1;
    KernelKind kernel = KernelKind::Rbf;
    Regularizer reg = Regularizer::L1;
    Grid grid;
    int n_outer = 10;
    int n_inner = 5;
    std::uint64_t seed = 42;
    bool group_by_drive = false;
    MtMklConfig mtmkl;  // C, nu and kernel come from the grid point
    ClusteringOptions clustering;
    LogRegOptions logreg;
};

/// Grid points of the family in tie-break order (C, then nu, then gamma
/// ascending).
std::vector<HyperParams> grid_points(const ExperimentConfig& cfg);

/// Instance keys consumed by each pipeline stage, for leakage checks.
struct UsageLog {
    std::map<std::string, std::set<std::uint64_t>> stages;

    void record(const std::string& stage, std::uint64_t key) { stages[stage].insert(key); }
    /// True when no recorded key is in `held_out`.
    [[nodiscard]] bool disjoint_from(const std::set<std::uint64_t>& held_out) const;
};

/// A fitted model of any family together with its feature scaler.
struct TrainedModel {
    ModelFamily family = ModelFamily::MtMkl;
    HyperParams hp;
    FeatureScaler scaler;
    std::optional<LogRegModel> logreg;
    std::optional<SingleTaskKernelModel> stk;
    std::optional<MtMklModel> mtmkl;
    /// Per task, mean scaled feature vector of its training windows (all
    /// labels). Routes drives the assignment does not know.
    Matrix task_centroids;
};

/// Fits on the whole of `train`. For mtmkl the drives are clustered on the
/// scaled training split unless `fixed` supplies the assignment.
TrainedModel train_model(std::span<const WindowInstance> train, const HyperParams& hp, const ExperimentConfig& cfg,
                         const TaskAssignment* fixed = nullptr, UsageLog* log = nullptr, GramCache* cache = nullptr,
                         std::optional<ClusteringResult>* clustering = nullptr);

struct ModelOutput {
    std::vector<int> labels;
    std::vector<double> scores;  // LSSVM decision values, or P(H) for logreg
    std::vector<std::string> routed_drives;  // mtmkl drives routed by centroid
};

/// Scores raw (unscaled) instances. Unknown drives are routed to the nearest
/// task centroid when `route_unknown` is set and rejected otherwise.
ModelOutput model_predict(const TrainedModel& model, std::span<const WindowInstance> instances, bool route_unknown,
                          GramCache* cache = nullptr);

struct FitOutcome {
    std::vector<int> predictions;
    std::vector<double> scores;
    std::vector<Vector> etas;  // mtmkl only, per task
    std::optional<ClusteringResult> clustering;
    FeatureScaler scaler;
    bool converged = true;
};

/// Fits one model on `train` and predicts `test`. Features are min-max
/// scaled on `train`; mtmkl additionally clusters the training drives.
FitOutcome fit_and_predict(std::span<const WindowInstance> train, std::span<const WindowInstance> test,
                           const HyperParams& hp, const ExperimentConfig& cfg, UsageLog* log = nullptr,
                           GramCache* cache = nullptr);

struct GridPointResult {
    HyperParams hp;
    double mean_accuracy = 0.0;
    bool failed = false;
    std::string failure;
};

struct GridSearchResult {
    HyperParams best;
    std::vector<GridPointResult> points;
};

/// Inner-fold selection by mean accuracy. A grid point whose training fails
/// scores 0 and is flagged.
GridSearchResult grid_search(std::span<const WindowInstance> train, const ExperimentConfig& cfg, std::uint64_t seed,
                             UsageLog* log = nullptr);

struct FoldReport {
    int fold = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    Metrics metrics;
    HyperParams selected;
    std::vector<GridPointResult> grid;
    std::vector<Vector> etas;
    std::optional<TaskAssignment> assignment;
    std::vector<std::string> fallback_drives;
    bool converged = true;
    bool leakage_check = false;
};

struct CvReport {
    ExperimentConfig config;
    std::vector<FoldReport> folds;
    double mean_accuracy = 0.0;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
    double mean_f1 = 0.0;
    bool leakage_check = false;
};

/// Binary L-vs-H dataset: drops M windows and balances the classes.
std::vector<WindowInstance> assemble_binary(std::span<const WindowInstance> instances, std::uint64_t seed);

/// Nested cross-validation over a balanced binary dataset.
CvReport run_experiment(std::span<const WindowInstance> dataset, const ExperimentConfig& cfg);

/// Views of instances as matrices: [0] EDA block, [1] HR block.
std::vector<Matrix> instance_views(std::span<const WindowInstance> ws);
Matrix instance_matrix(std::span<const WindowInstance> ws);
Vector instance_labels(std::span<const WindowInstance> ws);

}  // namespace stressmkl
