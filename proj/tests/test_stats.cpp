#include <doctest.h>

#include <cmath>
#include <vector>

#include "segex/errors.hpp"
#include "segex/rng.hpp"
#include "segex/stats.hpp"

using namespace segex;

TEST_CASE("welch reproduces a reference computation") {
    // frozen from an independent implementation (scipy.stats.ttest_ind,
    // equal_var=False)
    std::vector<double> a{12.1, 14.3, 9.8, 11.0, 13.5, 10.2, 12.8, 9.9};
    std::vector<double> b{10.4, 9.1, 11.2, 8.8, 10.9, 9.5};
    WelchResult res = welch_t_test(a, b);
    CHECK(res.t == doctest::Approx(2.3406500309354974).epsilon(1e-12));
    CHECK(res.df == doctest::Approx(11.406085083477226).epsilon(1e-12));
    CHECK(res.p == doctest::Approx(0.03836219070707445).epsilon(1e-10));
    CHECK_FALSE(res.degenerate);
}

TEST_CASE("welch is symmetric under arm swap and bounded") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a, b;
        for (int i = 0; i < 20; ++i) a.push_back(rng.normal() * 2 + 1);
        for (int i = 0; i < 15; ++i) b.push_back(rng.normal() * 3);
        WelchResult ab = welch_t_test(a, b);
        WelchResult ba = welch_t_test(b, a);
        CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-12));
        CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-12));
        CHECK(ab.p >= 0.0);
        CHECK(ab.p <= 1.0);
    }
}

TEST_CASE("degenerate variance falls back to the convention") {
    std::vector<double> threes{3, 3, 3};
    WelchResult same = welch_t_test(threes, threes);
    CHECK(same.degenerate);
    CHECK(same.p == 1.0);
    std::vector<double> fours{4, 4, 4};
    WelchResult diff = welch_t_test(threes, fours);
    CHECK(diff.degenerate);
    CHECK(diff.p == 0.0);
    CHECK_THROWS_AS(welch_t_test({}, threes), OneArmOnly);
}

TEST_CASE("identical samples give p = 1") {
    std::vector<double> a{1, 2, 3, 4, 5};
    WelchResult res = welch_t_test(a, a);
    CHECK_FALSE(res.degenerate);
    CHECK(res.p == doctest::Approx(1.0));
    CHECK(res.t == 0.0);
}

TEST_CASE("welch agrees with the permutation oracle within 0.02") {
    Rng rng(900);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> a, b;
        const double shift = rng.uniform(0, 1.2);
        for (int i = 0; i < 30; ++i) a.push_back(rng.normal() * 2);
        for (int i = 0; i < 30; ++i) b.push_back(rng.normal() * 2 + shift);
        WelchResult welch = welch_t_test(a, b);
        const double perm = permutation_pvalue(a, b, 20000, 555 + static_cast<std::uint64_t>(trial));
        CHECK(std::abs(welch.p - perm) < 0.02);
    }
}

TEST_CASE("permutation p is deterministic under its seed") {
    std::vector<double> a{1, 2, 3, 4, 5, 6};
    std::vector<double> b{2, 3, 4, 5, 6, 9};
    CHECK(permutation_pvalue(a, b, 5000, 42) == permutation_pvalue(a, b, 5000, 42));
    CHECK_THROWS_AS(permutation_pvalue(a, b, 0, 1), ConfigError);
}

TEST_CASE("false positive rate sits at alpha for null data") {
    Rng rng(3141);
    const int trials = 10000;
    int rejections = 0;
    std::vector<double> a(30), b(30);
    for (int t = 0; t < trials; ++t) {
        for (double& x : a) x = rng.normal();
        for (double& x : b) x = rng.normal();
        if (welch_t_test(a, b).p < 0.05) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / trials;
    CHECK(rate > 0.04);
    CHECK(rate < 0.06);
}

TEST_CASE("ks distance against uniform behaves") {
    std::vector<double> grid;
    for (int i = 0; i < 1000; ++i) grid.push_back((i + 0.5) / 1000.0);
    CHECK(ks_distance_uniform(grid) < 0.002);
    std::vector<double> point(100, 0.5);
    CHECK(ks_distance_uniform(point) == doctest::Approx(0.5));
}

TEST_CASE("mean_and_variance uses the sample denominator") {
    std::vector<double> xs{0, 2};
    MeanVar mv = mean_and_variance(xs);
    CHECK(mv.mean == 1.0);
    CHECK(mv.variance == 2.0);
    CHECK(mean_and_variance(std::vector<double>{5.0}).variance == 0.0);
}
