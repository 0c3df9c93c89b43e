#ifndef SEGEX_STATS_HPP
#define SEGEX_STATS_HPP

#include <cstdint>
#include <span>

namespace segex {

struct MeanVar {
    double mean = 0;
    double variance = 0; // sample (n-1) variance; 0 when n < 2
    std::size_t n = 0;
};

MeanVar mean_and_variance(std::span<const double> xs);

struct WelchResult {
    double t = 0;
    double df = 0;
    double p = 1.0;          // two-sided
    bool degenerate = false; // both arms constant: p is 1 (equal) or 0 by convention
};

// Two-sided Welch unequal-variance t-test with Welch-Satterthwaite degrees
// of freedom. Arms with fewer than two observations contribute zero variance.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

// Two-sided permutation test on the difference of means; validation oracle
// for the Welch path. p = (1 + #{|perm diff| >= |observed|}) / (resamples + 1).
double permutation_pvalue(std::span<const double> a, std::span<const double> b,
                          int resamples, std::uint64_t seed);

// Kolmogorov-Smirnov distance between a sample and Uniform(0,1)
double ks_distance_uniform(std::span<const double> values);

} // namespace segex

#endif
