#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stressmkl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class KernelKind { Linear, Rbf };

std::string to_string(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& text);

struct KernelSpec {
    KernelKind kind = KernelKind::Linear;
    double gamma = 1.0;  // Rbf only

    static KernelSpec linear() { return {KernelKind::Linear, 1.0}; }
    static KernelSpec rbf(double gamma);

    void validate() const;
    bool operator==(const KernelSpec&) const = default;
};

/// Kernel weights on the probability simplex.
class EtaVector {
public:
    /// Throws unless every weight is >= -1e-12 and the sum is 1 within 1e-9.
    explicit EtaVector(Vector weights);

    static EtaVector uniform(std::size_t views);

    [[nodiscard]] const Vector& weights() const { return w_; }
    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(w_.size()); }
    [[nodiscard]] double operator[](std::size_t m) const { return w_[static_cast<Eigen::Index>(m)]; }

private:
    Vector w_;
};

/// Row-wise kernel matrix k(x_i, z_j).
Matrix gram(const Matrix& X, const Matrix& Z, const KernelSpec& spec);

/// sum_m eta_m * K_m.
Matrix combined_gram(std::span<const Matrix> view_grams, const EtaVector& eta);

/// Thread-safe memo of Gram matrices keyed by the content of both operands
/// and the kernel spec. Shared reads, exclusive inserts.
class GramCache {
public:
    std::shared_ptr<const Matrix> get(const Matrix& X, const Matrix& Z, const KernelSpec& spec);

    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::size_t hits() const { return hits_.load(); }

private:
    struct Key {
        std::uint64_t x_hash, z_hash;
        Eigen::Index x_rows, z_rows, cols;
        int kind;
        std::uint64_t gamma_bits;
        auto operator<=>(const Key&) const = default;
    };
    mutable std::shared_mutex mutex_;
    std::map<Key, std::shared_ptr<const Matrix>> entries_;
    std::atomic<std::size_t> hits_{0};
};

/// FNV-1a over the bytes of a matrix (column-major).
std::uint64_t content_hash(const Matrix& m);

/// Writes a Gram matrix as CSV (debug dump).
void write_gram_csv(const Matrix& K, const std::string& path);

}  // namespace stressmkl
