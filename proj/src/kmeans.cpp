#include "segex/kmeans.hpp"

#include <cmath>
#include <limits>

#include "segex/errors.hpp"
#include "segex/rng.hpp"

namespace segex {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

struct LloydResult {
    std::vector<std::vector<double>> centroids;
    std::vector<int> labels;
    double wcss = 0;
    int iterations = 0;
};

std::vector<std::vector<double>> kmeanspp_init(const FeatureMatrix& x, int k, Rng& rng) {
    const std::size_t n = x.rows();
    std::vector<std::vector<double>> centers;
    centers.reserve(static_cast<std::size_t>(k));

    std::size_t first = static_cast<std::size_t>(rng.uniform_index(n));
    auto row0 = x.row(first);
    centers.emplace_back(row0.begin(), row0.end());

    std::vector<double> min_d2(n);
    for (std::size_t i = 0; i < n; ++i) min_d2[i] = sq_dist(x.row(i), centers[0]);

    while (centers.size() < static_cast<std::size_t>(k)) {
        double total = 0;
        for (double d : min_d2) total += d;
        std::size_t pick;
        if (total > 0) {
            double target = rng.next_double() * total;
            double cum = 0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cum += min_d2[i];
                if (target < cum) {
                    pick = i;
                    break;
                }
            }
        } else {
            // all points coincide with existing centers
            pick = static_cast<std::size_t>(rng.uniform_index(n));
        }
        auto row = x.row(pick);
        centers.emplace_back(row.begin(), row.end());
        for (std::size_t i = 0; i < n; ++i)
            min_d2[i] = std::min(min_d2[i], sq_dist(x.row(i), centers.back()));
    }
    return centers;
}

int nearest(std::span<const double> point, const std::vector<std::vector<double>>& centers) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = sq_dist(point, centers[c]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

LloydResult lloyd(const FeatureMatrix& x, int k, Rng& rng, const KMeansOptions& opts) {
    const std::size_t n = x.rows();
    const std::size_t dim = x.cols();

    LloydResult res;
    res.centroids = kmeanspp_init(x, k, rng);
    res.labels.assign(n, -1);

    double prev_wcss = std::numeric_limits<double>::infinity();
    std::vector<double> sums(static_cast<std::size_t>(k) * dim);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k));

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        res.iterations = iter;
        bool changed = false;
        double wcss = 0;
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto row = x.row(i);
            const int c = nearest(row, res.centroids);
            wcss += sq_dist(row, res.centroids[static_cast<std::size_t>(c)]);
            if (c != res.labels[i]) {
                changed = true;
                res.labels[i] = c;
            }
            counts[static_cast<std::size_t>(c)] += 1;
            double* s = sums.data() + static_cast<std::size_t>(c) * dim;
            for (std::size_t j = 0; j < dim; ++j) s[j] += row[j];
        }

        // empty-cluster repair: promote the point farthest from its centroid
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            std::size_t worst = 0;
            double worst_d = -1;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[static_cast<std::size_t>(res.labels[i])] <= 1) continue;
                const double d = sq_dist(x.row(i), res.centroids[static_cast<std::size_t>(res.labels[i])]);
                if (d > worst_d) {
                    worst_d = d;
                    worst = i;
                }
            }
            const int old = res.labels[worst];
            auto row = x.row(worst);
            counts[static_cast<std::size_t>(old)] -= 1;
            counts[static_cast<std::size_t>(c)] = 1;
            double* so = sums.data() + static_cast<std::size_t>(old) * dim;
            double* sc = sums.data() + static_cast<std::size_t>(c) * dim;
            for (std::size_t j = 0; j < dim; ++j) {
                so[j] -= row[j];
                sc[j] = row[j];
            }
            res.labels[worst] = c;
            wcss -= worst_d;
            changed = true;
        }

        if (wcss > prev_wcss * (1 + 1e-12))
            throw DataError("k-means wcss increased between iterations");

        for (int c = 0; c < k; ++c) {
            const double* s = sums.data() + static_cast<std::size_t>(c) * dim;
            const double cnt = static_cast<double>(counts[static_cast<std::size_t>(c)]);
            for (std::size_t j = 0; j < dim; ++j) res.centroids[static_cast<std::size_t>(c)][j] = s[j] / cnt;
        }

        res.wcss = wcss;
        if (!changed) break;
        if (prev_wcss - wcss <= opts.tol * prev_wcss && std::isfinite(prev_wcss)) break;
        prev_wcss = wcss;
    }

    // centroids moved after the last assignment; report the loss they achieve
    res.wcss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int c = nearest(x.row(i), res.centroids);
        res.labels[i] = c;
        res.wcss += sq_dist(x.row(i), res.centroids[static_cast<std::size_t>(c)]);
    }
    return res;
}

} // namespace

KMeansModel kmeans_fit(const FeatureMatrix& scores, int k, std::uint64_t seed,
                       const KMeansOptions& opts) {
    if (k < 1) throw ConfigError("kmeans_fit: k must be >= 1");
    if (scores.rows() < static_cast<std::size_t>(k))
        throw TooFewPoints("kmeans_fit: fewer points than clusters");
    if (opts.restarts < 1) throw ConfigError("kmeans_fit: restarts must be >= 1");

    KMeansModel best;
    best.wcss = std::numeric_limits<double>::infinity();
    for (int r = 0; r < opts.restarts; ++r) {
        Rng rng(mix_seed(seed, 0x6b6d, static_cast<std::uint64_t>(r)));
        LloydResult res = lloyd(scores, k, rng, opts);
        if (res.wcss < best.wcss) {
            best.k = k;
            best.dim = scores.cols();
            best.centroids = std::move(res.centroids);
            best.wcss = res.wcss;
            best.iterations_run = res.iterations;
        }
    }
    best.seed = seed;
    best.restarts = opts.restarts;
    return best;
}

int assign_cluster(std::span<const double> point, const KMeansModel& model) {
    if (point.size() != model.dim) throw DimensionMismatch("assign_cluster: dimension mismatch");
    return nearest(point, model.centroids);
}

std::vector<int> assign_all(const FeatureMatrix& scores, const KMeansModel& model) {
    std::vector<int> labels(scores.rows());
    for (std::size_t i = 0; i < scores.rows(); ++i) labels[i] = assign_cluster(scores.row(i), model);
    return labels;
}

double compute_wcss(const FeatureMatrix& scores, const KMeansModel& model) {
    double wcss = 0;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        const int c = assign_cluster(scores.row(i), model);
        wcss += sq_dist(scores.row(i), model.centroids[static_cast<std::size_t>(c)]);
    }
    return wcss;
}

} // namespace segex
