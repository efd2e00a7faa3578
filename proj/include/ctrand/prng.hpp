#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ctrand/rational.hpp"

namespace ctrand {

/// Stream format contract: all simulation randomness comes from splitmix64
/// streams; run i of a simulation uses the child stream derived from the
/// master seed and i. Recorded in output manifests as the generator id.
inline const char* kPrngId = "splitmix64-v1";

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        return mix64(z);
    }

  private:
    std::uint64_t state_;
};

/// Child stream i of a master seed; part of the trajectory file contract.
inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(master ^ mix64(0x9e3779b97f4a7c15ull * (index + 1)));
}

/// Deterministic random stream with the draws the simulator needs.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform on (0,1), never exactly 0 or 1: grid midpoints (r + 1/2) / 2^53.
    double uniform01() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Inverse-CDF exponential draw; strictly positive and finite.
    double exponential(double rate) { return -std::log(uniform01()) / rate; }

    /// Picks an index from exact rational weights summing to 1, by exact
    /// comparison of a 64-bit uniform against cumulative weights: the draw is
    /// i such that r/2^64 falls in [cum_{i-1}, cum_i).
    std::size_t pick(const std::vector<Rational>& weights) {
        mpz_class r(0);
        std::uint64_t raw = eng_();
        mpz_import(r.get_mpz_t(), 1, 1, sizeof(raw), 0, 0, &raw);
        mpz_class scale = mpz_class(1) << 64;
        Rational cum(0);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            cum += weights[i];
            // r < cum * 2^64  <=>  r * den < num * 2^64
            if (r * cum.get_den() < cum.get_num() * scale) return i;
        }
        return weights.size() - 1;  // cum == 1, unreachable for r < 2^64
    }

  private:
    SplitMix64 eng_;
};

}  // namespace ctrand
