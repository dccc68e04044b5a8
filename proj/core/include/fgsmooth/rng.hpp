#pragma once

#include <cstdint>
#include <random>

namespace fgs {

/// Deterministic normal generator: mt19937_64 (bit-exact per the standard)
/// feeding Box-Muller on 53-bit uniforms. The distribution algorithm is
/// fixed here rather than taken from std::normal_distribution, whose
/// output is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal();

  /// Stream seed derivation (splitmix64 finalizer), so per-run generators
  /// are independent of execution order.
  static uint64_t derive(uint64_t master, uint64_t stream);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fgs
