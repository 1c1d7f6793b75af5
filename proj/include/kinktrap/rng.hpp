// Deterministic random number generation. All stochastic code draws from
// Rng so that a single 64-bit seed reproduces every run bit for bit,
// independent of the standard library's distribution implementations.
//
// Generator: xoshiro256++ seeded through splitmix64. Sub-streams for
// ensemble work are derived with derive_seed(), never by consuming the
// parent stream.
#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace kinktrap {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic sub-seed: base_seed x (a, b) -> independent stream seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(base ^ splitmix64(a ^ 0x6a09e667f3bcc908ULL) ^ splitmix64(b ^ 0xbb67ae8584caa73bULL));
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) {
        std::uint64_t s = seed;
        for (auto& word : state_) {
            s = splitmix64(s);
            word = s;
        }
        have_spare_ = false;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; the spare is cached in the generator.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // Poisson via Knuth's product method; means here are O(1) per step.
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        double prod = 1.0;
        int n = -1;
        do {
            ++n;
            prod *= uniform();
        } while (prod > limit);
        return n;
    }

    // Uniformly distributed direction on the unit sphere.
    Eigen::Vector3d unit_vector() {
        const double cos_theta = 2.0 * uniform() - 1.0;
        const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
        const double phi = 2.0 * M_PI * uniform();
        return {sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta};
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
    bool have_spare_;
    double spare_ = 0.0;
};

}  // namespace kinktrap
