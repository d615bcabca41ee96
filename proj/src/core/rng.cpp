// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace bpdec {

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::string_view name) {
  const std::uint64_t tag = fnv1a(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  engine_.seed(seq);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::truncated_normal(double stddev) {
  for (;;) {
    const double z = normal();
    if (std::abs(z) <= 2.0) return z * stddev;
  }
}

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::restore(const std::string& text) {
  std::istringstream is(text);
  std::mt19937_64 engine;
  is >> engine;
  if (is.fail()) throw std::runtime_error("malformed rng state");
  engine_ = engine;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  std::uint64_t h = fnv1a(std::to_string(seed));
  h = fnv1a("/", h);
  h = fnv1a(name, h);
  h = fnv1a("/", h);
  return fnv1a(std::to_string(index), h);
}

const std::vector<std::string>& RngStreams::names() {
  static const std::vector<std::string> kNames = {"data", "dropout", "gua", "init", "masking", "mix"};
  return kNames;
}

RngStreams::RngStreams(std::uint64_t seed) : seed_(seed) {
  for (const auto& name : names()) streams_.emplace(name, Rng(seed, name));
}

Rng& RngStreams::operator[](const std::string& name) {
  auto it = streams_.find(name);
  if (it == streams_.end()) throw std::out_of_range("unknown rng stream '" + name + "'");
  return it->second;
}

const Rng& RngStreams::at(const std::string& name) const {
  auto it = streams_.find(name);
  if (it == streams_.end()) throw std::out_of_range("unknown rng stream '" + name + "'");
  return it->second;
}

}  // namespace bpdec
