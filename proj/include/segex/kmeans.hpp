#ifndef SEGEX_KMEANS_HPP
#define SEGEX_KMEANS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "segex/feature_matrix.hpp"

namespace segex {

struct KMeansModel {
    int k = 0;
    std::size_t dim = 0;
    std::vector<std::vector<double>> centroids; // k x dim
    double wcss = 0;
    std::uint64_t seed = 0;
    int iterations_run = 0; // of the winning restart
    int restarts = 1;
};

struct KMeansOptions {
    int restarts = 10;
    int max_iter = 300;
    double tol = 1e-6; // relative wcss improvement
};

// Lloyd's algorithm, k-means++ seeding per restart, lowest-wcss restart wins.
// Deterministic under (seed, restarts): restart r draws from a sub-seed of
// the root, ties keep the earliest restart.
KMeansModel kmeans_fit(const FeatureMatrix& scores, int k, std::uint64_t seed,
                       const KMeansOptions& opts = {});

// nearest centroid in Euclidean distance, ties resolved to the lowest index
int assign_cluster(std::span<const double> point, const KMeansModel& model);

std::vector<int> assign_all(const FeatureMatrix& scores, const KMeansModel& model);

double compute_wcss(const FeatureMatrix& scores, const KMeansModel& model);

} // namespace segex

#endif
