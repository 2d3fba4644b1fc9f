#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stressmkl/features.hpp"
#include "stressmkl/kernels.hpp"

namespace stressmkl {

/// Per-drive descriptor: mean feature vector over the drive's H-labeled
/// training windows.
struct ProfileVector {
    std::string drive_id;
    Vector p;
};

/// Task index per drive, 0-based internally (1-based in assignment.json).
struct TaskAssignment {
    int tasks = 1;
    std::map<std::string, int> task_of;

    [[nodiscard]] int task(const std::string& drive_id) const;
    [[nodiscard]] bool contains(const std::string& drive_id) const { return task_of.contains(drive_id); }
};

/// Mean feature vector of `instances`, which must all be H-labeled windows of
/// a single drive.
ProfileVector profile_vector(std::span<const WindowInstance> instances);

/// w_ij = exp(-gamma ||p_i - p_j||^2).
Matrix similarity_matrix(std::span<const ProfileVector> profiles, double gamma = 0.1);

/// Degree-minus-adjacency L = G - W.
Matrix graph_laplacian(const Matrix& W);

/// First `count` generalized eigenvectors of L u = lambda G u as columns,
/// eigenvalues ascending.
struct SpectralEmbedding {
    Vector eigenvalues;
    Matrix vectors;
};
SpectralEmbedding spectral_embedding(const Matrix& W, int count);

struct KMeansOptions {
    int restarts = 10;
    int max_iters = 300;
};

struct KMeansResult {
    std::vector<int> labels;
    Matrix centroids;
    double wcss = 0.0;
    bool converged = true;
};

/// k-means++ seeding, Lloyd iterations to an assignment fixed point, best of
/// `restarts` by within-cluster sum of squares. Labels are renumbered by
/// first appearance.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& opts = {});

/// Normalized spectral clustering of the similarity graph into T groups.
std::vector<int> spectral_cluster(const Matrix& W, int T, std::uint64_t seed, const KMeansOptions& opts = {});

struct ClusteringOptions {
    int tasks = 1;
    double gamma = 0.1;
    std::uint64_t seed = 0;
    KMeansOptions kmeans;
};

struct ClusteringResult {
    TaskAssignment assignment;
    std::vector<ProfileVector> profiles;  // drives with H windows, W order
    Matrix similarity;
    std::vector<std::string> fallback_drives;  // assigned via L-window mean
};

/// Profiles every drive present in `training`, clusters the drives that have
/// H windows, and assigns the rest to the nearest task centroid using their
/// L-window mean.
ClusteringResult assign_tasks(std::span<const WindowInstance> training, const ClusteringOptions& opts);

/// Drive order for a grouped similarity plot: by task, then drive_id.
std::vector<std::size_t> cluster_order(const ClusteringResult& result);

}  // namespace stressmkl
