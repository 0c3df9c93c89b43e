#ifndef SEGEX_FEATURES_HPP
#define SEGEX_FEATURES_HPP

#include <string>
#include <vector>

#include "segex/feature_matrix.hpp"

namespace segex {

// Everything required to replay the engineering transform on new rows.
struct EngineeringStats {
    double weeks = 0;
    double outlier_quantile = 0;
    std::vector<std::string> columns;           // per-session feature space (stage 2)
    std::vector<double> outlier_thresholds;     // aligned with columns
    std::vector<std::string> normalized_columns; // after any constant-column drops
    std::vector<double> means;                  // aligned with normalized_columns
    std::vector<double> sds;                    // aligned, all > 0
};

// Step 2: days/week, sessions/day, engagement per session.
// Requires days_visited and sessions leading the column list; zero-session
// rows (possible only in synthetic edge data) divide to 0 rather than NaN.
FeatureMatrix orthogonalize(const FeatureMatrix& raw, double weeks);

struct OutlierResult {
    FeatureMatrix cleaned;             // stage 3
    std::vector<std::string> removed;  // user ids
    std::vector<double> thresholds;    // per-column empirical quantile
};

// Step 3: drop any user strictly above a column's q-quantile.
OutlierResult remove_outliers(const FeatureMatrix& m, double quantile);

// the value at 1-based rank ceil(q*n) of the sorted sample
double empirical_quantile(std::vector<double> values, double q);

// Step 4: x -> ln(1 + x)
FeatureMatrix log_transform(const FeatureMatrix& m);

struct NormalizeResult {
    FeatureMatrix normalized; // stage 5
    std::vector<double> means;
    std::vector<double> sds;
    std::vector<std::string> dropped; // constant columns, only when drop_constant
};

// Step 5: per-column mean 0, sample (n-1) standard deviation 1.
NormalizeResult normalize(const FeatureMatrix& m, bool drop_constant = false);

struct PcaModel {
    std::vector<std::string> input_columns;
    // loadings[c] is the length-p loading vector of retained component c
    std::vector<std::vector<double>> loadings;
    std::vector<double> explained_variance_ratio; // non-increasing
    double variance_threshold = 0;

    std::size_t n_components() const { return loadings.size(); }
};

// Step 6: eigendecomposition of X'X, components ordered by descending
// eigenvalue, retained until the cumulative explained-variance ratio reaches
// the threshold. Sign convention: each loading's largest-magnitude entry is
// positive.
PcaModel fit_pca(const FeatureMatrix& m, double variance_threshold);

FeatureMatrix project_pca(const FeatureMatrix& m, const PcaModel& model);

// frozen-statistics replay for rows that were not part of training
// (outliers, late scoring): stage-2 matrix -> PCA scores
FeatureMatrix apply_frozen_transform(const FeatureMatrix& stage2, const EngineeringStats& stats,
                                     const PcaModel& model);

} // namespace segex

#endif
