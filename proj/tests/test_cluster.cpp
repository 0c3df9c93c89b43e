#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "segex/errors.hpp"
#include "segex/kmeans.hpp"
#include "segex/model_selection.hpp"
#include "segex/rng.hpp"

using namespace segex;

namespace {

FeatureMatrix points(std::vector<std::vector<double>> rows, std::size_t dim) {
    FeatureMatrix m;
    m.stage = Stage::pca;
    for (std::size_t j = 0; j < dim; ++j) m.columns.push_back("pc" + std::to_string(j + 1));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        m.user_ids.push_back("u" + std::to_string(i));
        m.values.insert(m.values.end(), rows[i].begin(), rows[i].end());
    }
    return m;
}

// exhaustive best 2-partition wcss for small point sets
double brute_force_wcss_k2(const FeatureMatrix& m) {
    const std::size_t n = m.rows();
    const std::size_t dim = m.cols();
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        std::vector<double> mean_a(dim, 0), mean_b(dim, 0);
        double na = 0, nb = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool in_a = mask & (1u << i);
            auto row = m.row(i);
            for (std::size_t j = 0; j < dim; ++j) (in_a ? mean_a : mean_b)[j] += row[j];
            (in_a ? na : nb) += 1;
        }
        for (std::size_t j = 0; j < dim; ++j) {
            mean_a[j] /= na;
            mean_b[j] /= nb;
        }
        double wcss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& mean = (mask & (1u << i)) ? mean_a : mean_b;
            auto row = m.row(i);
            for (std::size_t j = 0; j < dim; ++j) {
                const double d = row[j] - mean[j];
                wcss += d * d;
            }
        }
        best = std::min(best, wcss);
    }
    return best;
}

// independent Davies-Bouldin recomputation, straight from the definition
double db_oracle(const FeatureMatrix& m, const KMeansModel& model) {
    const int k = model.k;
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < m.rows(); ++i)
        members[static_cast<std::size_t>(assign_cluster(m.row(i), model))].push_back(i);
    auto dist = [&](std::span<const double> a, std::span<const double> b) {
        double s = 0;
        for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
        return std::sqrt(s);
    };
    std::vector<double> scatter(static_cast<std::size_t>(k), 0);
    for (int c = 0; c < k; ++c) {
        for (std::size_t i : members[static_cast<std::size_t>(c)])
            scatter[static_cast<std::size_t>(c)] += dist(m.row(i), model.centroids[static_cast<std::size_t>(c)]);
        scatter[static_cast<std::size_t>(c)] /= static_cast<double>(members[static_cast<std::size_t>(c)].size());
    }
    double total = 0;
    for (int i = 0; i < k; ++i) {
        double worst = 0;
        for (int j = 0; j < k; ++j) {
            if (i == j) continue;
            worst = std::max(worst, (scatter[static_cast<std::size_t>(i)] + scatter[static_cast<std::size_t>(j)]) /
                                        dist(model.centroids[static_cast<std::size_t>(i)],
                                             model.centroids[static_cast<std::size_t>(j)]));
        }
        total += worst;
    }
    return total / k;
}

FeatureMatrix random_points(Rng& rng, std::size_t n, std::size_t dim, double spread = 1.0) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row;
        for (std::size_t j = 0; j < dim; ++j) row.push_back(rng.normal() * spread);
        rows.push_back(row);
    }
    return points(rows, dim);
}

} // namespace

TEST_CASE("two obvious pairs split cleanly") {
    FeatureMatrix m = points({{0, 0}, {0, 1}, {10, 0}, {10, 1}}, 2);
    KMeansModel model = kmeans_fit(m, 2, 42);
    CHECK(model.wcss == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<std::vector<double>> centroids = model.centroids;
    std::sort(centroids.begin(), centroids.end());
    CHECK(centroids[0][0] == doctest::Approx(0.0));
    CHECK(centroids[0][1] == doctest::Approx(0.5));
    CHECK(centroids[1][0] == doctest::Approx(10.0));
    CHECK(centroids[1][1] == doctest::Approx(0.5));
}

TEST_CASE("k=1 yields the grand mean and total squared deviation") {
    FeatureMatrix m = points({{1, 2}, {3, 4}, {5, 0}}, 2);
    KMeansModel model = kmeans_fit(m, 1, 7);
    CHECK(model.centroids[0][0] == doctest::Approx(3.0));
    CHECK(model.centroids[0][1] == doctest::Approx(2.0));
    double expected = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        expected += (m.at(i, 0) - 3.0) * (m.at(i, 0) - 3.0);
        expected += (m.at(i, 1) - 2.0) * (m.at(i, 1) - 2.0);
    }
    CHECK(model.wcss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("k-means reaches the exhaustive optimum on 6-point instances") {
    Rng rng(2024);
    KMeansOptions opts;
    opts.restarts = 30;
    for (int trial = 0; trial < 20; ++trial) {
        FeatureMatrix m = random_points(rng, 6, 2, 2.0);
        KMeansModel model = kmeans_fit(m, 2, 1000 + static_cast<std::uint64_t>(trial), opts);
        const double best = brute_force_wcss_k2(m);
        CHECK(model.wcss == doctest::Approx(best).epsilon(1e-9));
        CHECK(model.wcss >= best - 1e-9); // a partition loss can never beat the optimum
    }
}

TEST_CASE("too few points is an error") {
    FeatureMatrix m = points({{0, 0}, {1, 1}}, 2);
    CHECK_THROWS_AS(kmeans_fit(m, 3, 1), TooFewPoints);
}

TEST_CASE("duplicate points force the empty-cluster repair") {
    // only two distinct locations for three clusters: one init must collide
    FeatureMatrix m = points({{0}, {0}, {5}}, 1);
    KMeansModel model = kmeans_fit(m, 3, 12345);
    CHECK(model.wcss == doctest::Approx(0.0));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const int c = assign_cluster(m.row(i), model);
        CHECK(model.centroids[static_cast<std::size_t>(c)][0] == doctest::Approx(m.at(i, 0)));
    }
}

TEST_CASE("assignment returns the nearest centroid with low-index ties") {
    KMeansModel model;
    model.k = 5;
    model.dim = 1;
    model.centroids = {{100}, {2}, {50}, {75}, {4}};
    const double point[] = {3.0}; // equidistant between centroids 1 and 4
    CHECK(assign_cluster(std::span<const double>(point, 1), model) == 1);
    for (int c = 0; c < 5; ++c)
        CHECK(assign_cluster(model.centroids[static_cast<std::size_t>(c)], model) == c);
    const double bad[] = {1.0, 2.0};
    CHECK_THROWS_AS(assign_cluster(std::span<const double>(bad, 2), model), DimensionMismatch);
}

TEST_CASE("assignment agrees with a linear scan") {
    Rng rng(55);
    FeatureMatrix m = random_points(rng, 50, 3);
    KMeansModel model = kmeans_fit(m, 4, 9);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto row = m.row(i);
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (int c = 0; c < model.k; ++c) {
            double d = 0;
            for (std::size_t j = 0; j < 3; ++j) {
                const double diff = row[j] - model.centroids[static_cast<std::size_t>(c)][j];
                d += diff * diff;
            }
            if (d < best) {
                best = d;
                best_c = c;
            }
        }
        CHECK(assign_cluster(row, model) == best_c);
    }
}

TEST_CASE("converged centroids equal their members' means") {
    Rng rng(66);
    std::vector<std::vector<double>> rows;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 40; ++i)
            rows.push_back({c * 20.0 + rng.normal(), c * -10.0 + rng.normal()});
    FeatureMatrix m = points(rows, 2);
    KMeansModel model = kmeans_fit(m, 3, 5);
    std::vector<int> labels = assign_all(m, model);
    for (int c = 0; c < 3; ++c) {
        std::vector<double> mean(2, 0);
        double count = 0;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (labels[i] != c) continue;
            mean[0] += m.at(i, 0);
            mean[1] += m.at(i, 1);
            count += 1;
        }
        CHECK(std::abs(mean[0] / count - model.centroids[static_cast<std::size_t>(c)][0]) < 1e-8);
        CHECK(std::abs(mean[1] / count - model.centroids[static_cast<std::size_t>(c)][1]) < 1e-8);
    }
}

TEST_CASE("fixed seed reproduces the model bit for bit") {
    Rng rng(77);
    FeatureMatrix m = random_points(rng, 200, 4);
    KMeansModel a = kmeans_fit(m, 5, 31337);
    KMeansModel b = kmeans_fit(m, 5, 31337);
    CHECK(a.wcss == b.wcss);
    CHECK(a.centroids == b.centroids);
    CHECK(a.iterations_run == b.iterations_run);
}

TEST_CASE("bic matches the scalar formula on a hand case") {
    // 4 points on a line, K=1, d=1
    FeatureMatrix m = points({{0}, {1}, {2}, {3}}, 1);
    KMeansModel model = kmeans_fit(m, 1, 3);
    const double n = 4, d = 1, k = 1;
    const double wcss = 2.25 + 0.25 + 0.25 + 2.25;
    const double variance = wcss / (d * (n - k));
    const double log_lik = 4 * std::log(4.0 / 4.0) - n * d / 2 * std::log(2 * M_PI * variance) - d * (n - k) / 2;
    const double expected = -2 * log_lik + (k * d + k) * std::log(n);
    CHECK(bic_score(m, model) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("bic penalizes extra clusters on single-gaussian data") {
    int increased = 0;
    for (int trial = 0; trial < 10; ++trial) {
        Rng rng(9000 + static_cast<std::uint64_t>(trial));
        FeatureMatrix m = random_points(rng, 400, 3);
        KMeansModel k1 = kmeans_fit(m, 1, 17);
        KMeansModel k2 = kmeans_fit(m, 2, 17);
        if (bic_score(m, k2) > bic_score(m, k1)) ++increased;
    }
    CHECK(increased >= 9);
}

TEST_CASE("bic needs more points than clusters") {
    FeatureMatrix m = points({{0}, {1}, {2}}, 1);
    KMeansModel model = kmeans_fit(m, 3, 5);
    CHECK_THROWS_AS(bic_score(m, model), DegenerateVariance);
    // duplicate points: zero wcss at K=2
    FeatureMatrix dup = points({{0}, {0}, {5}, {5}}, 1);
    KMeansModel m2 = kmeans_fit(dup, 2, 5);
    CHECK_THROWS_AS(bic_score(dup, m2), DegenerateVariance);
}

TEST_CASE("davies-bouldin hits the closed forms") {
    // two singleton clusters: zero scatter
    FeatureMatrix singles = points({{0}, {10}}, 1);
    KMeansModel m1 = kmeans_fit(singles, 2, 1);
    CHECK(davies_bouldin(singles, m1) == doctest::Approx(0.0));

    // scatter 1 each, centroids 10 apart: (1+1)/10
    FeatureMatrix m = points({{-1}, {1}, {9}, {11}}, 1);
    KMeansModel model = kmeans_fit(m, 2, 1);
    CHECK(davies_bouldin(m, model) == doctest::Approx(0.2).epsilon(1e-12));

    KMeansModel k1 = kmeans_fit(m, 1, 1);
    CHECK_THROWS_AS(davies_bouldin(m, k1), KTooSmall);
}

TEST_CASE("davies-bouldin flags empty clusters") {
    FeatureMatrix m = points({{0}, {1}}, 1);
    KMeansModel model;
    model.k = 2;
    model.dim = 1;
    model.centroids = {{0.5}, {999.0}}; // nobody is assigned to the far centroid
    CHECK_THROWS_AS(davies_bouldin(m, model), EmptyCluster);
}

TEST_CASE("davies-bouldin matches the from-definition oracle") {
    Rng rng(808);
    for (int trial = 0; trial < 25; ++trial) {
        FeatureMatrix m = random_points(rng, 60, 3, 3.0);
        KMeansModel model = kmeans_fit(m, 2 + static_cast<int>(trial % 4), 100 + static_cast<std::uint64_t>(trial));
        CHECK(davies_bouldin(m, model) == doctest::Approx(db_oracle(m, model)).epsilon(1e-9));
    }
}

TEST_CASE("davies-bouldin is invariant to translation, rotation and scale") {
    Rng rng(404);
    FeatureMatrix m = random_points(rng, 80, 2, 2.0);
    KMeansModel model = kmeans_fit(m, 3, 11);
    const double base = davies_bouldin(m, model);

    const double theta = 0.73, tx = 5.0, ty = -3.0, scale = 2.5;
    auto transform = [&](double x, double y) {
        const double rx = std::cos(theta) * x - std::sin(theta) * y;
        const double ry = std::sin(theta) * x + std::cos(theta) * y;
        return std::pair<double, double>{scale * rx + tx, scale * ry + ty};
    };
    FeatureMatrix moved = m;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto [x, y] = transform(m.at(i, 0), m.at(i, 1));
        moved.at(i, 0) = x;
        moved.at(i, 1) = y;
    }
    KMeansModel moved_model = model;
    for (auto& c : moved_model.centroids) {
        auto [x, y] = transform(c[0], c[1]);
        c = {x, y};
    }
    CHECK(davies_bouldin(moved, moved_model) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("select_k recovers three separated gaussian blobs by both criteria") {
    int bic_hits = 0, db_hits = 0;
    for (int trial = 0; trial < 10; ++trial) {
        Rng rng(3000 + static_cast<std::uint64_t>(trial));
        std::vector<std::vector<double>> rows;
        const double centers[3][2] = {{0, 0}, {12, 0}, {0, 12}};
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 200; ++i)
                rows.push_back({centers[c][0] + rng.normal(), centers[c][1] + rng.normal()});
        FeatureMatrix m = points(rows, 2);
        KSelectionCurve curve = select_k(m, 2, 8, 500 + static_cast<std::uint64_t>(trial));
        if (curve.recommended_k == 3) ++bic_hits;
        if (curve.db_recommended_k && *curve.db_recommended_k == 3) ++db_hits;
    }
    CHECK(bic_hits >= 9);
    CHECK(db_hits >= 9);
}

TEST_CASE("degenerate k range returns its only candidate") {
    Rng rng(21);
    FeatureMatrix m = random_points(rng, 30, 2);
    KSelectionCurve curve = select_k(m, 2, 2, 5);
    CHECK(curve.recommended_k == 2);
    CHECK(curve.rows.size() == 1);
    CHECK_FALSE(curve.criteria_disagree);
}

TEST_CASE("wcss is non-increasing along the selection curve") {
    Rng rng(31);
    FeatureMatrix m = random_points(rng, 150, 3, 2.0);
    KMeansOptions opts;
    opts.restarts = 10;
    KSelectionCurve curve = select_k(m, 1, 8, 77, opts);
    const double slack = 1e-6 * curve.rows[0].wcss;
    for (std::size_t i = 1; i < curve.rows.size(); ++i)
        CHECK(curve.rows[i].wcss <= curve.rows[i - 1].wcss + slack);
    CHECK_FALSE(curve.rows[0].davies_bouldin.has_value()); // K=1 cell stays empty
    const std::string csv = selection_curve_csv(curve);
    CHECK(csv.rfind("K,wcss,bic,davies_bouldin\n", 0) == 0);
    CHECK(csv.find("1,") != std::string::npos);
}
