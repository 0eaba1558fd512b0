#pragma once

#include <cstdint>
#include <random>

namespace twinsec {

// Thin wrapper around mt19937_64 that maps raw engine output to doubles by
// hand. std::uniform_real_distribution is implementation-defined, which would
// break the byte-identical-output guarantee across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1)
  double next_unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace twinsec
