#pragma once

#include <cstdint>
#include <span>

#include "stressmkl/kernels.hpp"

namespace stressmkl {

/// Dual solution of
///     [ 0   1^T       ] [b    ]   [0]
///     [ 1   K + I / C ] [alpha] = [y]
/// so that f(x) = sum_i alpha_i k(x, x_i) + b. alpha carries the label sign;
/// the classifier-form Lagrange multipliers are alpha_i * y_i.
struct LssvmSolution {
    Vector alpha;
    double bias = 0.0;
    double C = 1.0;
    std::uint64_t gram_key = 0;
    double residual = 0.0;  // relative KKT residual
    bool jittered = false;
};

/// Relative residual ||A [b; alpha] - [0; y]|| / ||[0; y]||.
double kkt_residual(const Matrix& K, const Vector& y, const LssvmSolution& s);

/// y entries must be -1 or +1 with both present.
LssvmSolution lssvm_fit(const Matrix& K, const Vector& y, double C);

/// Scores f = K_test * alpha + b for an m x n cross-Gram.
Vector lssvm_decision(const LssvmSolution& s, const Matrix& k_test);

/// sign with sign(0) = +1.
inline int decision_label(double score) { return score >= 0.0 ? 1 : -1; }

}  // namespace stressmkl
