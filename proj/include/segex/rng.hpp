#ifndef SEGEX_RNG_HPP
#define SEGEX_RNG_HPP

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace segex {

// Deterministic random source. std::mt19937_64's output stream is fixed by
// the standard, but the std::*_distribution adapters are not, so every
// sampler here is implemented by hand to keep seeded results stable across
// toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1)
    double next_double() { return (eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // uniform integer in [0, n), n >= 1
    std::uint64_t uniform_index(std::uint64_t n);

    bool bernoulli(double p) { return next_double() < p; }

    double normal();

    // exact Poisson sampler; splits large means so Knuth's product method
    // never underflows
    std::int64_t poisson(double mean);

    std::int64_t binomial(std::int64_t n, double p);

    // index sampled proportionally to non-negative weights
    std::size_t discrete(std::span<const double> weights);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// splitmix64-style mixing for deriving independent sub-seeds from one root
std::uint64_t mix_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0);

} // namespace segex

#endif
