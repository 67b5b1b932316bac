// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "mtvae/array.hpp"

namespace mtvae {

/// Deterministic random source. All distributions are implemented explicitly
/// on top of mt19937_64 so that streams are reproducible across platforms and
/// standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Inclusive integer range.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(engine_() % span);
  }

  /// Standard normal via Box-Muller (no cached spare, so the state is
  /// exactly the engine state).
  double normal() {
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  DenseArray normal_array(std::vector<std::int64_t> shape, double sd = 1.0) {
    DenseArray a(std::move(shape));
    for (std::int64_t i = 0; i < a.size(); ++i) a[i] = sd * normal();
    return a;
  }

  DenseArray uniform_array(std::vector<std::int64_t> shape, double lo, double hi) {
    DenseArray a(std::move(shape));
    for (std::int64_t i = 0; i < a.size(); ++i) a[i] = uniform(lo, hi);
    return a;
  }

  std::string serialize() const;
  void deserialize(const std::string& state);

  /// Independent substream keyed by (seed, stream index); used for
  /// order-independent per-window evaluation.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mtvae
