#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "crsim/time.hpp"

namespace crsim {

// splitmix64 finalizer. Used to derive independent per-round seeds from a
// master seed: seed_i = splitmix64(master + (i + 1) * golden_gamma).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_round_seed(std::uint64_t master_seed,
                                       std::uint64_t round_index) {
  return splitmix64(master_seed + round_index * 0x9e3779b97f4a7c15ull);
}

// Seedable random source, one per simulation run. mt19937_64 is fully
// specified by the standard, so identical seeds give bit-identical streams
// on every platform; the transforms below are explicit for the same reason
// (<random> distributions are implementation-defined).
class StochasticSource {
 public:
  explicit StochasticSource(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform over the closed interval [lo, hi].
  double uniform(double lo, double hi) {
    if (lo > hi) {
      throw std::invalid_argument("uniform: lo > hi");
    }
    const double u =
        static_cast<double>(engine_() >> 11) / 9007199254740991.0;  // [0, 1]
    return lo + u * (hi - lo);
  }

  // Inverse transform for the exponential distribution, rounded to whole
  // microseconds: round(-mean * ln(u)) with u in (0, 1]. u = 1 maps to 0.
  static SimTime exponential_from_u(double mean_us, double u) {
    if (!(mean_us > 0.0)) {
      throw std::invalid_argument("exponential_from_u: mean must be > 0");
    }
    if (!(u > 0.0) || u > 1.0) {
      throw std::invalid_argument("exponential_from_u: u must be in (0, 1]");
    }
    return static_cast<SimTime>(std::llround(-mean_us * std::log(u)));
  }

  // Exponential sample with the given mean.
  SimTime exponential_us(double mean_us) {
    return exponential_from_u(mean_us, 1.0 - uniform01());
  }

  // Uniform index in [0, n). Unbiased 128-bit multiply-shift.
  std::size_t pick_index(std::size_t n) {
    if (n == 0) {
      throw std::invalid_argument("pick_index: n must be > 0");
    }
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace crsim
