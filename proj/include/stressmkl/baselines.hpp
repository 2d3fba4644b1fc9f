#pragma once

#include <vector>

#include "stressmkl/kernels.hpp"
#include "stressmkl/lssvm.hpp"

namespace stressmkl {

enum class Penalty { L1, L2 };

struct LogRegOptions {
    double tolerance = 1e-6;
    int max_iters = 100000;
    bool record_objective = false;
};

/// Drive-agnostic logistic regression. Minimizes mean logistic loss plus
/// lambda * ||w||_1 (L1) or lambda / 2 * ||w||^2 (L2); the bias is not
/// penalized.
struct LogRegModel {
    Vector weights;
    double bias = 0.0;
    Penalty penalty = Penalty::L2;
    double lambda = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;

    [[nodiscard]] int sparsity() const { return static_cast<int>((weights.array() == 0.0).count()); }
};

LogRegModel logreg_fit(const Matrix& X, const Vector& y, Penalty penalty, double lambda,
                       const LogRegOptions& opts = {});

struct LogRegPrediction {
    std::vector<int> labels;  // +1 = H iff p >= 0.5
    Vector probabilities;
};

LogRegPrediction logreg_predict(const LogRegModel& model, const Matrix& X);

/// Mean logistic loss plus penalty at (w, b).
double logreg_objective(const Matrix& X, const Vector& y, const Vector& w, double b, Penalty penalty, double lambda);

/// Single-kernel LSSVM over the concatenated feature vector.
struct SingleTaskKernelModel {
    KernelSpec spec;
    LssvmSolution solution;
    Matrix train_X;
};

SingleTaskKernelModel single_task_kernel_fit(const Matrix& X, const Vector& y, const KernelSpec& spec, double C,
                                             GramCache* cache = nullptr);

Vector single_task_kernel_scores(const SingleTaskKernelModel& model, const Matrix& X, GramCache* cache = nullptr);

}  // namespace stressmkl
