#include "stressmkl/lssvm.hpp"

#include <cmath>

#include "stressmkl/error.hpp"

namespace stressmkl {

namespace {

void check_labels(const Vector& y) {
    bool pos = false, neg = false;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] == 1.0)
            pos = true;
        else if (y[i] == -1.0)
            neg = true;
        else
            throw Error(ErrorKind::InvalidParameter, "labels must be -1 or +1");
    }
    if (!pos || !neg) throw Error(ErrorKind::MissingClass, "LSSVM training labels contain a single class");
}

// Solves H [nu, eta] = [y, 1] for symmetric positive (semi)definite H.
// Returns false if both factorizations fail.
bool solve_pair(const Matrix& H, const Vector& y, Vector& nu, Vector& ones_sol) {
    const Eigen::Index n = H.rows();
    Matrix rhs(n, 2);
    rhs.col(0) = y;
    rhs.col(1).setOnes();
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() == Eigen::Success) {
        Matrix sol = llt.solve(rhs);
        nu = sol.col(0);
        ones_sol = sol.col(1);
        return nu.allFinite() && ones_sol.allFinite();
    }
    Eigen::LDLT<Matrix> ldlt(H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
    Matrix sol = ldlt.solve(rhs);
    nu = sol.col(0);
    ones_sol = sol.col(1);
    return nu.allFinite() && ones_sol.allFinite();
}

}  // namespace

double kkt_residual(const Matrix& K, const Vector& y, const LssvmSolution& s) {
    const double inv_c = 1.0 / s.C;
    const double r0 = s.alpha.sum();
    Vector r = K * s.alpha + inv_c * s.alpha;
    r.array() += s.bias;
    r -= y;
    const double num = std::sqrt(r0 * r0 + r.squaredNorm());
    const double den = y.norm();
    return den > 0.0 ? num / den : num;
}

LssvmSolution lssvm_fit(const Matrix& K, const Vector& y, double C) {
    if (K.rows() != K.cols() || K.rows() != y.size())
        throw Error(ErrorKind::Shape, "Gram is " + std::to_string(K.rows()) + "x" + std::to_string(K.cols()) +
                                          " but there are " + std::to_string(y.size()) + " labels");
    if (y.size() < 2) throw Error(ErrorKind::InsufficientData, "LSSVM needs at least 2 instances");
    if (!(C > 0.0) || !std::isfinite(C)) throw Error(ErrorKind::InvalidParameter, "C must be positive");
    check_labels(y);

    const Eigen::Index n = K.rows();
    // Block elimination of the bias row: with H = K + I/C,
    // b = (1^T H^-1 y) / (1^T H^-1 1) and alpha = H^-1 (y - b 1).
    Matrix H = K;
    H.diagonal().array() += 1.0 / C;
    Vector nu, eta;
    bool jittered = false;
    if (!solve_pair(H, y, nu, eta)) {
        const double jitter = 1e-10 * K.trace() / static_cast<double>(n);
        H.diagonal().array() += std::max(jitter, 1e-300);
        jittered = true;
        if (!solve_pair(H, y, nu, eta)) throw Error(ErrorKind::IllConditioned, "LSSVM system is singular");
    }
    const double denom = eta.sum();
    if (!(std::abs(denom) > 0.0) || !std::isfinite(denom))
        throw Error(ErrorKind::IllConditioned, "LSSVM bias elimination failed");

    LssvmSolution s;
    s.C = C;
    s.jittered = jittered;
    s.gram_key = content_hash(K);
    s.bias = nu.sum() / denom;
    s.alpha = nu - s.bias * eta;

    s.residual = kkt_residual(K, y, s);
    if (s.residual > 1e-10) {
        // iterative refinement on the full bordered system
        Eigen::LLT<Matrix> llt(H);
        if (llt.info() == Eigen::Success) {
            for (int step = 0; step < 2 && s.residual > 1e-12; ++step) {
                const double r0 = s.alpha.sum();
                Vector r = K * s.alpha + s.alpha / C;
                r.array() += s.bias;
                r = y - r;
                // correction (db, da) solves the same bordered system with rhs (-r0, r)
                Vector hr = llt.solve(r);
                const double db = (hr.sum() + r0) / denom;
                Vector da = hr - db * eta;
                s.bias += db;
                s.alpha += da;
                s.residual = kkt_residual(K, y, s);
            }
        }
    }
    if (!std::isfinite(s.residual) || s.residual > 1e-8)
        throw Error(ErrorKind::IllConditioned, "LSSVM KKT residual " + std::to_string(s.residual) + " exceeds 1e-8");
    return s;
}

Vector lssvm_decision(const LssvmSolution& s, const Matrix& k_test) {
    if (k_test.cols() != s.alpha.size())
        throw Error(ErrorKind::Shape, "cross-Gram has " + std::to_string(k_test.cols()) + " columns, model has " +
                                          std::to_string(s.alpha.size()) + " training instances");
    Vector f = k_test * s.alpha;
    f.array() += s.bias;
    return f;
}

}  // namespace stressmkl
