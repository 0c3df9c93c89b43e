#include "segex/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace segex {

std::uint64_t Rng::uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be >= 1");
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = eng_();
    } while (x >= limit);
    return x % n;
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller; u clamped away from 0 so log stays finite
    double u = next_double();
    if (u <= 0.0) u = 0x1.0p-53;
    double v = next_double();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 2.0 * 3.14159265358979323846 * v;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

std::int64_t Rng::poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: mean must be >= 0");
    std::int64_t total = 0;
    // sum of independent halves is exact
    while (mean > 30.0) {
        double half = mean / 2.0;
        total += poisson(half);
        mean -= half;
    }
    const double limit = std::exp(-mean);
    std::int64_t k = 0;
    double prod = 1.0;
    do {
        ++k;
        prod *= next_double();
    } while (prod > limit);
    return total + k - 1;
}

std::int64_t Rng::binomial(std::int64_t n, double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return n;
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < n; ++i) hits += bernoulli(p) ? 1 : 0;
    return hits;
}

std::size_t Rng::discrete(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("discrete: weights must sum to > 0");
    double x = next_double() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        cum += weights[i];
        if (x < cum) return i;
    }
    return weights.size() - 1;
}

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace segex
