#include "segex/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "segex/errors.hpp"
#include "segex/rng.hpp"

namespace segex {

MeanVar mean_and_variance(std::span<const double> xs) {
    MeanVar mv;
    mv.n = xs.size();
    if (mv.n == 0) return mv;
    double sum = 0;
    for (double x : xs) sum += x;
    mv.mean = sum / static_cast<double>(mv.n);
    if (mv.n < 2) return mv;
    double ss = 0;
    for (double x : xs) {
        const double d = x - mv.mean;
        ss += d * d;
    }
    mv.variance = ss / static_cast<double>(mv.n - 1);
    return mv;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw OneArmOnly("welch_t_test: both samples must be non-empty");
    const MeanVar ma = mean_and_variance(a);
    const MeanVar mb = mean_and_variance(b);

    const double va = ma.n >= 2 ? ma.variance / static_cast<double>(ma.n) : 0.0;
    const double vb = mb.n >= 2 ? mb.variance / static_cast<double>(mb.n) : 0.0;
    const double se2 = va + vb;

    WelchResult res;
    if (se2 <= 0.0) {
        res.degenerate = true;
        res.p = ma.mean == mb.mean ? 1.0 : 0.0;
        res.t = ma.mean == mb.mean ? 0.0 : std::numeric_limits<double>::infinity();
        return res;
    }

    double df_den = 0.0;
    if (ma.n >= 2) df_den += va * va / static_cast<double>(ma.n - 1);
    if (mb.n >= 2) df_den += vb * vb / static_cast<double>(mb.n - 1);
    res.df = se2 * se2 / df_den;
    res.t = (ma.mean - mb.mean) / std::sqrt(se2);

    boost::math::students_t dist(res.df);
    res.p = 2.0 * boost::math::cdf(dist, -std::abs(res.t));
    return res;
}

double permutation_pvalue(std::span<const double> a, std::span<const double> b,
                          int resamples, std::uint64_t seed) {
    if (a.empty() || b.empty()) throw OneArmOnly("permutation_pvalue: both samples must be non-empty");
    if (resamples < 1) throw ConfigError("permutation_pvalue: resamples must be >= 1");

    std::vector<double> pooled;
    pooled.reserve(a.size() + b.size());
    pooled.insert(pooled.end(), a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());

    const auto na = a.size();
    double sum_a = 0, sum_all = 0;
    for (double x : a) sum_a += x;
    for (double x : pooled) sum_all += x;
    const double nb = static_cast<double>(b.size());
    const double observed =
        std::abs(sum_a / static_cast<double>(na) - (sum_all - sum_a) / nb);

    Rng rng(seed);
    int hits = 0;
    for (int r = 0; r < resamples; ++r) {
        // partial Fisher-Yates: draw the first na elements of a permutation
        double s = 0;
        for (std::size_t i = 0; i < na; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(pooled.size() - i));
            std::swap(pooled[i], pooled[j]);
            s += pooled[i];
        }
        const double diff = std::abs(s / static_cast<double>(na) - (sum_all - s) / nb);
        if (diff >= observed - 1e-12) ++hits;
    }
    return (1.0 + hits) / (1.0 + resamples);
}

double ks_distance_uniform(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double dist = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        dist = std::max(dist, std::max(std::abs(sorted[i] - lo), std::abs(sorted[i] - hi)));
    }
    return dist;
}

} // namespace segex
