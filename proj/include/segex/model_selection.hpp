#ifndef SEGEX_MODEL_SELECTION_HPP
#define SEGEX_MODEL_SELECTION_HPP

#include <optional>
#include <string>

#include "segex/kmeans.hpp"

namespace segex {

// BIC under the spherical-Gaussian mixture reading of k-means, with pooled
// per-coordinate variance wcss / (d * (n - K)) and K*d + K free parameters
// (centroids plus mixing weights). Lower is better.
double bic_score(const FeatureMatrix& scores, const KMeansModel& model);

// mean over clusters of the worst (scatter_i + scatter_j) / centroid-distance
// ratio; scatter is the mean distance to the centroid. Lower is better.
double davies_bouldin(const FeatureMatrix& scores, const KMeansModel& model);

struct KSelectionRow {
    int k = 0;
    double wcss = 0;
    double bic = 0;
    std::optional<double> davies_bouldin; // undefined at K=1
};

struct KSelectionCurve {
    std::vector<KSelectionRow> rows;
    int recommended_k = 0;                // argmin BIC
    std::optional<int> db_recommended_k;  // argmin DB over K >= 2
    bool criteria_disagree = false;
};

KSelectionCurve select_k(const FeatureMatrix& scores, int k_min, int k_max, std::uint64_t seed,
                         const KMeansOptions& opts = {});

// CSV export: K,wcss,bic,davies_bouldin (empty DB cell at K=1)
std::string selection_curve_csv(const KSelectionCurve& curve);

} // namespace segex

#endif
