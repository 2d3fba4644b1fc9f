#include "stressmkl/kernels.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>

#include "stressmkl/error.hpp"

namespace stressmkl {

std::string to_string(KernelKind kind) { return kind == KernelKind::Linear ? "linear" : "rbf"; }

KernelKind parse_kernel_kind(const std::string& text) {
    if (text == "linear") return KernelKind::Linear;
    if (text == "rbf") return KernelKind::Rbf;
    throw Error(ErrorKind::InvalidParameter, "unknown kernel '" + text + "' (expected linear or rbf)");
}

KernelSpec KernelSpec::rbf(double gamma) {
    KernelSpec s{KernelKind::Rbf, gamma};
    s.validate();
    return s;
}

void KernelSpec::validate() const {
    if (kind == KernelKind::Rbf && !(gamma > 0.0 && std::isfinite(gamma)))
        throw Error(ErrorKind::InvalidParameter, "RBF gamma must be positive");
}

EtaVector::EtaVector(Vector weights) : w_(std::move(weights)) {
    if (w_.size() == 0) throw Error(ErrorKind::Shape, "empty kernel weight vector");
    for (Eigen::Index i = 0; i < w_.size(); ++i)
        if (!(w_[i] >= -1e-12)) throw Error(ErrorKind::InvalidParameter, "negative kernel weight");
    if (std::abs(w_.sum() - 1.0) > 1e-9) throw Error(ErrorKind::InvalidParameter, "kernel weights must sum to 1");
}

EtaVector EtaVector::uniform(std::size_t views) {
    return EtaVector(Vector::Constant(static_cast<Eigen::Index>(views), 1.0 / static_cast<double>(views)));
}

Matrix gram(const Matrix& X, const Matrix& Z, const KernelSpec& spec) {
    spec.validate();
    if (X.cols() != Z.cols())
        throw Error(ErrorKind::Shape, "kernel operands have " + std::to_string(X.cols()) + " and " +
                                          std::to_string(Z.cols()) + " columns");
    Matrix K = X * Z.transpose();
    if (spec.kind == KernelKind::Linear) return K;
    const Vector xn = X.rowwise().squaredNorm();
    const Vector zn = Z.rowwise().squaredNorm();
    const bool same = (&X == &Z) || (X.rows() == Z.rows() && X == Z);
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
        for (Eigen::Index i = 0; i < K.rows(); ++i) {
            const double d2 = std::max(0.0, xn[i] + zn[j] - 2.0 * K(i, j));
            K(i, j) = std::exp(-spec.gamma * d2);
        }
    }
    if (same) {
        // exact symmetry and unit diagonal despite rounding in the expansion
        for (Eigen::Index j = 0; j < K.cols(); ++j) {
            K(j, j) = 1.0;
            for (Eigen::Index i = j + 1; i < K.rows(); ++i) K(j, i) = K(i, j);
        }
    }
    return K;
}

Matrix combined_gram(std::span<const Matrix> view_grams, const EtaVector& eta) {
    if (view_grams.size() != eta.size())
        throw Error(ErrorKind::Shape, std::to_string(view_grams.size()) + " Gram matrices but " +
                                          std::to_string(eta.size()) + " weights");
    if (view_grams.empty()) throw Error(ErrorKind::Shape, "no Gram matrices");
    Matrix out = Matrix::Zero(view_grams[0].rows(), view_grams[0].cols());
    for (std::size_t m = 0; m < view_grams.size(); ++m) {
        if (view_grams[m].rows() != out.rows() || view_grams[m].cols() != out.cols())
            throw Error(ErrorKind::Shape, "Gram matrices differ in shape");
        out += eta[m] * view_grams[m];
    }
    return out;
}

std::uint64_t content_hash(const Matrix& m) {
    std::uint64_t h = 1469598103934665603ULL;
    const double* p = m.data();
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        std::uint64_t v = std::bit_cast<std::uint64_t>(p[i]);
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffU;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::shared_ptr<const Matrix> GramCache::get(const Matrix& X, const Matrix& Z, const KernelSpec& spec) {
    const Key key{content_hash(X),
                  content_hash(Z),
                  X.rows(),
                  Z.rows(),
                  X.cols(),
                  static_cast<int>(spec.kind),
                  spec.kind == KernelKind::Rbf ? std::bit_cast<std::uint64_t>(spec.gamma) : 0};
    {
        std::shared_lock lock(mutex_);
        if (auto it = entries_.find(key); it != entries_.end()) {
            ++hits_;
            return it->second;
        }
    }
    auto value = std::make_shared<const Matrix>(gram(X, Z, spec));
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.emplace(key, std::move(value));
    return it->second;
}

std::size_t GramCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void write_gram_csv(const Matrix& K, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
        for (Eigen::Index j = 0; j < K.cols(); ++j) out << (j ? "," : "") << K(i, j);
        out << '\n';
    }
}

}  // namespace stressmkl
