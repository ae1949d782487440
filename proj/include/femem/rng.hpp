#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace femem {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Seedable, splittable generator. A child stream depends only on the parent
/// seed and the stream id, never on how many draws the parent has made.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(detail::splitmix64(seed)) {}

    std::uint64_t seed() const noexcept { return seed_; }

    Rng split(std::uint64_t stream) const {
        return Rng(detail::splitmix64(seed_ ^ detail::splitmix64(stream + 0x632be59bd9b4e019ULL)));
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    /// Lognormal factor with mean 1 and relative standard deviation `rel`.
    double lognormal_unit_mean(double rel) {
        if (rel <= 0.0) return 1.0;
        const double s2 = std::log1p(rel * rel);
        return std::exp(normal(-0.5 * s2, std::sqrt(s2)));
    }

    std::mt19937_64& engine() noexcept { return engine_; }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace femem
