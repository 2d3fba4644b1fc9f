#include "stressmkl/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stressmkl/error.hpp"
#include "stressmkl/rng.hpp"

namespace stressmkl {

int TaskAssignment::task(const std::string& drive_id) const {
    auto it = task_of.find(drive_id);
    if (it == task_of.end()) throw Error(ErrorKind::UnassignedDrive, "drive '" + drive_id + "' has no task");
    return it->second;
}

ProfileVector profile_vector(std::span<const WindowInstance> instances) {
    if (instances.empty()) throw Error(ErrorKind::MissingProfile, "no H-labeled training windows for drive");
    ProfileVector out;
    out.drive_id = instances.front().drive_id;
    out.p = Vector::Zero(kFeatureCount);
    for (const auto& w : instances) {
        if (w.drive_id != out.drive_id) throw Error(ErrorKind::InvalidParameter, "profile over mixed drives");
        if (w.label != StressLabel::H) throw Error(ErrorKind::InvalidParameter, "profile uses H windows only");
        const auto f = w.features();
        for (std::size_t i = 0; i < kFeatureCount; ++i) out.p[static_cast<Eigen::Index>(i)] += f[i];
    }
    out.p /= static_cast<double>(instances.size());
    return out;
}

Matrix similarity_matrix(std::span<const ProfileVector> profiles, double gamma) {
    const auto E = static_cast<Eigen::Index>(profiles.size());
    Matrix W(E, E);
    for (Eigen::Index i = 0; i < E; ++i) {
        W(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double d2 = (profiles[i].p - profiles[j].p).squaredNorm();
            W(i, j) = W(j, i) = std::exp(-gamma * d2);
        }
    }
    return W;
}

Matrix graph_laplacian(const Matrix& W) {
    Matrix L = -W;
    L.diagonal() += W.rowwise().sum();
    return L;
}

SpectralEmbedding spectral_embedding(const Matrix& W, int count) {
    const Eigen::Index E = W.rows();
    if (W.cols() != E) throw Error(ErrorKind::Shape, "similarity matrix is not square");
    if (count < 1 || count > E) throw Error(ErrorKind::InvalidParameter, "eigenvector count out of range");
    const Vector degree = W.rowwise().sum();
    for (Eigen::Index i = 0; i < E; ++i)
        if (!(degree[i] > 0.0)) throw Error(ErrorKind::DegenerateGraph, "vertex " + std::to_string(i) + " has zero degree");
    const Vector inv_sqrt = degree.array().rsqrt();
    // L_sym = G^-1/2 L G^-1/2; u = G^-1/2 w maps its eigenvectors back.
    Matrix Lsym = inv_sqrt.asDiagonal() * graph_laplacian(W) * inv_sqrt.asDiagonal();
    Lsym = 0.5 * (Lsym + Lsym.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(Lsym);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::IllConditioned, "eigensolver failed");

    Matrix U = inv_sqrt.asDiagonal() * solver.eigenvectors();
    for (Eigen::Index c = 0; c < E; ++c) {
        U.col(c).normalize();
        // deterministic sign: first clearly nonzero entry positive
        for (Eigen::Index r = 0; r < E; ++r) {
            if (std::abs(U(r, c)) > 1e-12) {
                if (U(r, c) < 0) U.col(c) *= -1.0;
                break;
            }
        }
    }
    const Vector& lambda = solver.eigenvalues();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(E));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (std::abs(lambda[a] - lambda[b]) > 1e-12) return lambda[a] < lambda[b];
        for (Eigen::Index r = 0; r < E; ++r) {
            if (std::abs(U(r, a) - U(r, b)) > 1e-12) return U(r, a) < U(r, b);
        }
        return false;
    });
    SpectralEmbedding out;
    out.eigenvalues.resize(count);
    out.vectors.resize(E, count);
    for (int c = 0; c < count; ++c) {
        out.eigenvalues[c] = lambda[order[static_cast<std::size_t>(c)]];
        out.vectors.col(c) = U.col(order[static_cast<std::size_t>(c)]);
    }
    return out;
}

namespace {

std::vector<int> renumber(const std::vector<int>& labels) {
    std::map<int, int> remap;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = remap.emplace(labels[i], static_cast<int>(remap.size()));
        out[i] = it->second;
    }
    return out;
}

struct Run {
    std::vector<int> labels;
    Matrix centroids;
    double wcss = std::numeric_limits<double>::infinity();
    bool converged = false;
    bool valid = false;
};

Run lloyd_run(const Matrix& X, int k, Rng& rng, int max_iters) {
    const Eigen::Index n = X.rows();
    Run run;
    // k-means++ seeding
    Matrix C(k, X.cols());
    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::size_t first = rng.index(static_cast<std::size_t>(n));
    C.row(0) = X.row(static_cast<Eigen::Index>(first));
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            d2[static_cast<std::size_t>(i)] =
                std::min(d2[static_cast<std::size_t>(i)], (X.row(i) - C.row(c - 1)).squaredNorm());
            total += d2[static_cast<std::size_t>(i)];
        }
        if (!(total > 0.0)) return run;  // fewer distinct points than clusters
        double target = rng.uniform() * total;
        Eigen::Index pick = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
            target -= d2[static_cast<std::size_t>(i)];
            if (target < 0.0 && d2[static_cast<std::size_t>(i)] > 0.0) {
                pick = i;
                break;
            }
        }
        C.row(c) = X.row(pick);
    }

    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = (X.row(i) - C.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (labels[static_cast<std::size_t>(i)] != best) {
                labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        Matrix next = Matrix::Zero(k, X.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            next.row(labels[static_cast<std::size_t>(i)]) += X.row(i);
            ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) return run;  // empty cluster
            next.row(c) /= counts[static_cast<std::size_t>(c)];
        }
        C = next;
        if (!changed) {
            run.converged = true;
            break;
        }
    }
    run.wcss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) run.wcss += (X.row(i) - C.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    run.labels = labels;
    run.centroids = C;
    run.valid = true;
    return run;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& opts) {
    if (k < 1 || k > points.rows())
        throw Error(ErrorKind::InvalidParameter, "k-means needs 1 <= k <= number of points (k = " + std::to_string(k) + ")");
    Rng rng(seed);
    Run best;
    for (int r = 0; r < std::max(1, opts.restarts); ++r) {
        Run run = lloyd_run(points, k, rng, opts.max_iters);
        if (run.valid && run.wcss < best.wcss - 1e-15) best = std::move(run);
    }
    if (!best.valid) throw Error(ErrorKind::ClusteringFailure, "k-means produced an empty cluster in every restart");
    KMeansResult out;
    out.labels = renumber(best.labels);
    out.centroids.resize(k, points.cols());
    std::vector<bool> placed(static_cast<std::size_t>(k), false);
    for (std::size_t i = 0; i < best.labels.size(); ++i) {
        const int to = out.labels[i];
        if (!placed[static_cast<std::size_t>(to)]) {
            out.centroids.row(to) = best.centroids.row(best.labels[i]);
            placed[static_cast<std::size_t>(to)] = true;
        }
    }
    out.wcss = best.wcss;
    out.converged = best.converged;
    return out;
}

std::vector<int> spectral_cluster(const Matrix& W, int T, std::uint64_t seed, const KMeansOptions& opts) {
    const Eigen::Index E = W.rows();
    if (W.cols() != E) throw Error(ErrorKind::Shape, "similarity matrix is not square");
    if (T < 1 || T > E) throw Error(ErrorKind::InvalidParameter, "need 1 <= T <= number of drives");
    if ((W.array() < 0.0).any()) throw Error(ErrorKind::InvalidParameter, "similarity weights must be non-negative");
    if (!W.isApprox(W.transpose(), 1e-12)) throw Error(ErrorKind::InvalidParameter, "similarity matrix is not symmetric");
    const Vector degree = W.rowwise().sum();
    for (Eigen::Index i = 0; i < E; ++i)
        if (!(degree[i] > 0.0)) throw Error(ErrorKind::DegenerateGraph, "vertex " + std::to_string(i) + " has zero degree");
    if (T == 1) return std::vector<int>(static_cast<std::size_t>(E), 0);
    const SpectralEmbedding emb = spectral_embedding(W, T);
    return kmeans(emb.vectors, T, seed, opts).labels;
}

ClusteringResult assign_tasks(std::span<const WindowInstance> training, const ClusteringOptions& opts) {
    std::map<std::string, std::vector<WindowInstance>> high, low;
    std::vector<std::string> drives;
    for (const auto& w : training) {
        if (!high.contains(w.drive_id) && !low.contains(w.drive_id)) drives.push_back(w.drive_id);
        if (w.label == StressLabel::H)
            high[w.drive_id].push_back(w);
        else if (w.label == StressLabel::L)
            low[w.drive_id].push_back(w);
        else {
            high[w.drive_id];  // register drive
        }
    }
    std::sort(drives.begin(), drives.end());
    drives.erase(std::unique(drives.begin(), drives.end()), drives.end());

    ClusteringResult out;
    out.assignment.tasks = opts.tasks;
    for (const auto& d : drives) {
        auto it = high.find(d);
        if (it != high.end() && !it->second.empty()) out.profiles.push_back(profile_vector(it->second));
    }
    if (static_cast<int>(out.profiles.size()) < opts.tasks)
        throw Error(ErrorKind::InvalidParameter, std::to_string(out.profiles.size()) +
                                                     " drives with H windows, fewer than T = " + std::to_string(opts.tasks));
    out.similarity = similarity_matrix(out.profiles, opts.gamma);
    const auto labels = spectral_cluster(out.similarity, opts.tasks, opts.seed, opts.kmeans);
    for (std::size_t i = 0; i < out.profiles.size(); ++i) out.assignment.task_of[out.profiles[i].drive_id] = labels[i];

    // fallback: nearest task centroid by L-window mean
    Matrix centroids = Matrix::Zero(opts.tasks, kFeatureCount);
    std::vector<int> counts(static_cast<std::size_t>(opts.tasks), 0);
    for (std::size_t i = 0; i < out.profiles.size(); ++i) {
        centroids.row(labels[i]) += out.profiles[i].p.transpose();
        ++counts[static_cast<std::size_t>(labels[i])];
    }
    for (int t = 0; t < opts.tasks; ++t) centroids.row(t) /= counts[static_cast<std::size_t>(t)];
    for (const auto& d : drives) {
        if (out.assignment.contains(d)) continue;
        auto it = low.find(d);
        if (it == low.end() || it->second.empty())
            throw Error(ErrorKind::MissingProfile, "drive '" + d + "' has neither H nor L training windows");
        Vector mean = Vector::Zero(kFeatureCount);
        for (const auto& w : it->second) {
            const auto f = w.features();
            for (std::size_t i = 0; i < kFeatureCount; ++i) mean[static_cast<Eigen::Index>(i)] += f[i];
        }
        mean /= static_cast<double>(it->second.size());
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int t = 0; t < opts.tasks; ++t) {
            const double dist = (centroids.row(t).transpose() - mean).squaredNorm();
            if (dist < best_d) {
                best_d = dist;
                best = t;
            }
        }
        out.assignment.task_of[d] = best;
        out.fallback_drives.push_back(d);
    }
    return out;
}

std::vector<std::size_t> cluster_order(const ClusteringResult& result) {
    std::vector<std::size_t> order(result.profiles.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const int ta = result.assignment.task(result.profiles[a].drive_id);
        const int tb = result.assignment.task(result.profiles[b].drive_id);
        if (ta != tb) return ta < tb;
        return result.profiles[a].drive_id < result.profiles[b].drive_id;
    });
    return order;
}

}  // namespace stressmkl
