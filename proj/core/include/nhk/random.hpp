#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace nhk {

/// 64-bit linear congruential generator, x ← a·x + c (mod 2^64), with
/// a = 6364136223846793005 and c = 1442695040888963407. Uniform doubles use
/// the top 53 bits: u = (x >> 11)·2^-53 ∈ [0, 1). The stream is defined by
/// these constants alone, so it is reproducible in any language.
class Lcg {
 public:
  explicit Lcg(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::linear_congruential_engine<std::uint64_t, 6364136223846793005ULL, 1442695040888963407ULL, 0>
      engine_;
};

}  // namespace nhk
