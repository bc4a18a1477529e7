// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace hbf {

/// Derives a 64-bit key from a root seed, a stream name and a list of counters
/// (SplitMix64 finalizer chained over the inputs). Pure function: the same
/// inputs always name the same stream, so records can be generated in any order.
std::uint64_t derive_key(std::uint64_t root, std::string_view stream,
                         std::initializer_list<std::uint64_t> counters = {});

/// Seeded random source. Each named stream owns its own engine.
class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t root, std::string_view name,
                    std::initializer_list<std::uint64_t> counters = {}) {
    return Rng(derive_key(root, name, counters));
  }

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();

  Engine& engine() { return engine_; }

 private:
  Engine engine_;
};

}  // namespace hbf
