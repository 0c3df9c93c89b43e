#include "segex/model_selection.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "segex/errors.hpp"
#include "segex/rng.hpp"
#include "segex/util.hpp"

namespace segex {

double bic_score(const FeatureMatrix& scores, const KMeansModel& model) {
    const auto n = static_cast<double>(scores.rows());
    const auto d = static_cast<double>(model.dim);
    const int k = model.k;
    if (scores.rows() <= static_cast<std::size_t>(k))
        throw DegenerateVariance("bic_score: need more points than clusters");

    std::vector<int> labels = assign_all(scores, model);
    std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
    double wcss = 0;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        counts[static_cast<std::size_t>(labels[i])] += 1;
        auto row = scores.row(i);
        const auto& c = model.centroids[static_cast<std::size_t>(labels[i])];
        for (std::size_t j = 0; j < c.size(); ++j) {
            const double diff = row[j] - c[j];
            wcss += diff * diff;
        }
    }

    const double variance = wcss / (d * (n - k));
    if (!(variance > 0)) throw DegenerateVariance("bic_score: pooled variance is not positive");

    double log_lik = 0;
    for (double cnt : counts)
        if (cnt > 0) log_lik += cnt * std::log(cnt / n);
    log_lik -= n * d / 2.0 * std::log(2.0 * 3.14159265358979323846 * variance);
    log_lik -= d * (n - k) / 2.0;

    const double params = static_cast<double>(k) * d + static_cast<double>(k);
    return -2.0 * log_lik + params * std::log(n);
}

double davies_bouldin(const FeatureMatrix& scores, const KMeansModel& model) {
    const int k = model.k;
    if (k < 2) throw KTooSmall("davies_bouldin: needs at least 2 clusters");

    std::vector<int> labels = assign_all(scores, model);
    std::vector<double> scatter(static_cast<std::size_t>(k), 0.0);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        auto row = scores.row(i);
        double d2 = 0;
        for (std::size_t j = 0; j < model.dim; ++j) {
            const double diff = row[j] - model.centroids[c][j];
            d2 += diff * diff;
        }
        scatter[c] += std::sqrt(d2);
        counts[c] += 1;
    }
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0)
            throw EmptyCluster("davies_bouldin: cluster " + std::to_string(c) + " is empty");
        scatter[static_cast<std::size_t>(c)] /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }

    double sum = 0;
    for (int i = 0; i < k; ++i) {
        double worst = 0;
        for (int j = 0; j < k; ++j) {
            if (i == j) continue;
            double sep2 = 0;
            for (std::size_t t = 0; t < model.dim; ++t) {
                const double diff = model.centroids[static_cast<std::size_t>(i)][t] -
                                    model.centroids[static_cast<std::size_t>(j)][t];
                sep2 += diff * diff;
            }
            const double ratio = (scatter[static_cast<std::size_t>(i)] + scatter[static_cast<std::size_t>(j)]) /
                                 std::sqrt(sep2);
            worst = std::max(worst, ratio);
        }
        sum += worst;
    }
    return sum / static_cast<double>(k);
}

KSelectionCurve select_k(const FeatureMatrix& scores, int k_min, int k_max, std::uint64_t seed,
                         const KMeansOptions& opts) {
    if (k_min < 1 || k_max < k_min) throw ConfigError("select_k: bad k range");
    if (scores.rows() < static_cast<std::size_t>(k_max))
        throw TooFewPoints("select_k: k range exceeds the number of points");

    KSelectionCurve curve;
    double best_bic = std::numeric_limits<double>::infinity();
    double best_db = std::numeric_limits<double>::infinity();
    for (int k = k_min; k <= k_max; ++k) {
        KMeansModel model = kmeans_fit(scores, k, mix_seed(seed, 0x4b53, static_cast<std::uint64_t>(k)), opts);
        KSelectionRow row;
        row.k = k;
        row.wcss = model.wcss;
        row.bic = bic_score(scores, model);
        if (k >= 2) row.davies_bouldin = davies_bouldin(scores, model);
        if (row.bic < best_bic) {
            best_bic = row.bic;
            curve.recommended_k = k;
        }
        if (row.davies_bouldin && *row.davies_bouldin < best_db) {
            best_db = *row.davies_bouldin;
            curve.db_recommended_k = k;
        }
        curve.rows.push_back(row);
    }
    curve.criteria_disagree =
        curve.db_recommended_k && *curve.db_recommended_k != curve.recommended_k;
    if (curve.criteria_disagree)
        std::cerr << "warning: BIC recommends K=" << curve.recommended_k
                  << " but Davies-Bouldin recommends K=" << *curve.db_recommended_k << "\n";
    return curve;
}

std::string selection_curve_csv(const KSelectionCurve& curve) {
    std::string out = "K,wcss,bic,davies_bouldin\n";
    for (const auto& row : curve.rows) {
        out += std::to_string(row.k);
        out += ',';
        out += fmt_double(row.wcss);
        out += ',';
        out += fmt_double(row.bic);
        out += ',';
        if (row.davies_bouldin) out += fmt_double(*row.davies_bouldin);
        out += '\n';
    }
    return out;
}

} // namespace segex
