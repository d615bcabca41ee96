// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace bpdec {

/// Seeded random stream. The engine is std::mt19937_64; the conversions to
/// uniform reals, bounded integers and normals are written out here so the
/// produced sequences do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  Rng() : Rng(0, "default") {}
  /// Substream `name` of `seed`. Distinct names give independent streams.
  Rng(std::uint64_t seed, std::string_view name);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n); n > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);
  /// True with probability p (u < p, so p = 0 never and p = 1 always fires).
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller, one draw consumes two uniforms.
  double normal();
  /// Normal(0, stddev) resampled until |x| <= 2·stddev.
  double truncated_normal(double stddev);

  /// In-place Fisher-Yates shuffle.
  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1), first + static_cast<std::ptrdiff_t>(j));
    }
  }

  /// Engine state as text; `restore` accepts what `state` produced.
  std::string state() const;
  void restore(const std::string& text);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Seed derivation for child streams, e.g. per-epoch shuffles:
/// FNV-1a over the decimal seed, the name and the index.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t index);

/// Named substreams ("masking", "gua", "mix", "init", "data", "dropout").
class RngStreams {
 public:
  RngStreams() = default;
  explicit RngStreams(std::uint64_t seed);

  Rng& operator[](const std::string& name);
  const Rng& at(const std::string& name) const;
  const std::map<std::string, Rng>& all() const noexcept { return streams_; }
  std::uint64_t seed() const noexcept { return seed_; }

  static const std::vector<std::string>& names();

  bool operator==(const RngStreams& other) const = default;

 private:
  std::uint64_t seed_ = 0;
  std::map<std::string, Rng> streams_;
};

}  // namespace bpdec
