#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stressmkl/clustering.hpp"
#include "stressmkl/kernels.hpp"
#include "stressmkl/lssvm.hpp"

namespace stressmkl {

enum class Regularizer { L1, L2 };

std::string to_string(Regularizer reg);
Regularizer parse_regularizer(const std::string& text);

/// How the cross-task coupling term enters the descent.
///   Default    : Omega_1 = -nu sum_r sum_s eta_r^T eta_s,
///                Omega_2 = -nu sum_r sum_s ||eta_r - eta_s||, and the eta
///                gradient carries the -2 dOmega factor.
///   Similarity : Omega_1 takes the opposite sign so that, together with the
///                -2 factor, a larger nu pulls the tasks' weights together.
///                Omega_2 is unchanged because the -2 factor already makes it
///                a distance penalty.
enum class OmegaSign { Default, Similarity };

std::string to_string(OmegaSign sign);
OmegaSign parse_omega_sign(const std::string& text);

struct MtMklConfig {
    KernelSpec kernel = KernelSpec::rbf(1.0);
    Regularizer reg = Regularizer::L1;
    OmegaSign omega_sign = OmegaSign::Default;
    double nu = 1e-4;
    double C = 1.0;
    double step_size = 0.01;
    int max_outer_iters = 100;
    double eta_tolerance = 1e-4;
    int max_step_halvings = 40;
    bool learn_eta = true;
    std::optional<Vector> initial_eta;  // uniform over views when empty

    void validate() const;
};

/// Coupling term over all task weight vectors.
double omega(std::span<const Vector> etas, Regularizer reg, double nu, OmegaSign sign = OmegaSign::Default);

/// d omega / d eta_r. The L2 form uses subgradient 0 for coincident pairs.
Vector omega_gradient(std::span<const Vector> etas, Regularizer reg, double nu, std::size_t r,
                      OmegaSign sign = OmegaSign::Default);

/// Per task: one Gram matrix per view over that task's training instances.
using TaskGrams = std::vector<Matrix>;

/// g_m = -2 dOmega/d eta_m^(r) - 1/2 sum_i sum_j a_i a_j y_i y_j K_m(i, j),
/// where `multipliers[r]` holds the classifier-form Lagrange multipliers a of
/// task r (LSSVM alpha times y).
Vector objective_gradient(std::size_t r, std::span<const Vector> etas, std::span<const Vector> multipliers,
                          std::span<const TaskGrams> view_grams, std::span<const Vector> labels, Regularizer reg,
                          double nu, OmegaSign sign = OmegaSign::Default);

/// The function objective_gradient differentiates, with the multipliers held
/// fixed: -2 Omega(etas) - 1/2 sum_r a_r^T Y_r K_eta_r Y_r a_r.
double fixed_alpha_objective(std::span<const Vector> etas, std::span<const Vector> multipliers,
                             std::span<const TaskGrams> view_grams, std::span<const Vector> labels, Regularizer reg,
                             double nu, OmegaSign sign = OmegaSign::Default);

/// Euclidean projection onto {eta >= 0, sum eta = 1}.
EtaVector project_simplex(const Vector& v);

/// Training data of one task: views[m] is n x d_m, y in {-1, +1}^n.
struct TaskData {
    std::vector<Matrix> views;
    Vector y;
};

struct TaskModel {
    EtaVector eta = EtaVector::uniform(2);
    LssvmSolution solution;
    std::vector<Matrix> train_views;
    Vector y;
};

struct MtMklModel {
    MtMklConfig config;
    TaskAssignment assignment;
    std::vector<TaskModel> tasks;
    bool converged = false;
    int iterations = 0;
    /// etas after every outer iteration, starting with the initial weights.
    std::vector<std::vector<Vector>> eta_history;
};

/// Alternating optimization: combined Gram per task, LSSVM per task, one
/// projected gradient step on every eta, until the largest weight change
/// drops below eta_tolerance or max_outer_iters is reached.
MtMklModel mtmkl_train(std::span<const TaskData> tasks, const MtMklConfig& config, GramCache* cache = nullptr);

struct Prediction {
    int label = 1;  // +1 = H
    double score = 0.0;
};

/// Scores for rows of test views routed to `task`.
Vector mtmkl_task_scores(const MtMklModel& model, std::size_t task, std::span<const Matrix> test_views,
                         GramCache* cache = nullptr);

/// Routes one instance to its drive's task (any drive when there is a single
/// task). views[m] is a single row.
Prediction mtmkl_predict(const MtMklModel& model, std::span<const Matrix> views, const std::string& drive_id);

}  // namespace stressmkl
