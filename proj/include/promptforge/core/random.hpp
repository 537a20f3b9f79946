// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace promptforge {

/// Seeded generator with platform-independent derived distributions.
///
/// std::mt19937_64 output is fixed by the standard, but the std::*_distribution
/// adaptors are not, so everything on top of the raw engine is spelled out here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream derived from (seed, stream) via splitmix64.
  static Rng derived(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform in [0, n) by rejection; n must be > 0.
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  /// k distinct indices from [0, n), returned in ascending order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace promptforge
