#pragma once

#include <cstdint>
#include <random>

namespace pot {

/// Test hook that perturbs thread scheduling at protocol boundaries so that
/// repeated runs explore different physical interleavings.
class Jitter {
 public:
  explicit Jitter(std::uint64_t seed) : rng_(seed) {}

  /// Most calls do nothing; the rest yield, spin, or sleep briefly.
  void perturb();

 private:
  std::mt19937_64 rng_;
};

}  // namespace pot
