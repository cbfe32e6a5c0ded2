#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace nfdoa {

// Counter-based deterministic random stream (splitmix64 finalizer over a
// keyed counter). Streams derived from (seed, index...) are independent, so
// per-sample generation can run in any order and still reproduce bitwise.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
        return mix(mix(seed) ^ mix(a ^ 0x517cc1b727220a95ULL) ^ mix(b ^ 0x2545f4914f6cdd1dULL));
    }

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

    // Uniform in [0, 1)
    double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi)
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // Standard normal pair via Box-Muller.
    void next_gaussian_pair(double& g0, double& g1) {
        double u1 = 1.0 - next_uniform(); // (0, 1], keeps the log finite
        double u2 = next_uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        g0 = r * std::cos(2.0 * M_PI * u2);
        g1 = r * std::sin(2.0 * M_PI * u2);
    }

    // Circularly-symmetric complex Gaussian with E|z|^2 = 1.
    std::complex<double> next_cn() {
        double a, b;
        next_gaussian_pair(a, b);
        return {a * M_SQRT1_2, b * M_SQRT1_2};
    }

    // Deterministic Fisher-Yates; avoids std::shuffle's library-defined draws.
    template <typename Vec>
    void shuffle(Vec& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace nfdoa
