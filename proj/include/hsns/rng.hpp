/// @file rng.hpp
/// @brief Deterministic random number generation.
///
/// Every stochastic draw in the library comes from SplitMix64. Gaussians
/// use Box--Muller on two consecutive uniforms with no cached spare, so the
/// generator state is a single 64-bit word and checkpoint resumption is
/// bit-exact by construction.

#pragma once

#include <cmath>
#include <cstdint>

namespace hsns {

/// SplitMix64 (Vigna's fixed-increment variant of SplittableRandom).
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box--Muller. Consumes exactly two uniforms and
    /// keeps only the cosine branch; no state beyond the 64-bit word.
    double next_gaussian() {
        const double u1 = 1.0 - next_double();  // (0, 1], safe for log
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    std::uint64_t state() const { return state_; }
    void set_state(std::uint64_t s) { state_ = s; }

  private:
    std::uint64_t state_;
};

/// The (index+1)-th output of the SplitMix64 sequence seeded at master.
/// split_seed(0, 0) == 0xE220A8397B1DCDAF.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    SplitMix64 g(master);
    std::uint64_t out = g.next_u64();
    for (std::uint64_t i = 0; i < index; ++i) out = g.next_u64();
    return out;
}

}  // namespace hsns
