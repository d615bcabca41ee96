// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "bpdec/config.hpp"
#include "bpdec/param_store.hpp"

namespace bpdec {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  static AdamHyper from(const TrainConfig& train) {
    return {train.beta1, train.beta2, train.adam_eps, train.weight_decay};
  }
};

/// First and second moments per parameter plus the number of applied
/// updates.
template <typename T>
struct AdamState {
  ParamStore<T> m;
  ParamStore<T> v;
  std::size_t step = 0;

  static AdamState zeros_like(const ParamStore<T>& params) { return {params.zeros_like(), params.zeros_like(), 0}; }
  bool operator==(const AdamState&) const = default;
};

/// Rejection of an update because a gradient holds NaN or ±inf.
class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(std::string name)
      : std::runtime_error("non-finite gradient in parameter '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// Learning rate of update number `update` (1-based): linear warmup over
/// round(warmup_frac · steps) updates to the peak, then linear decay that
/// would reach zero at update steps + 1.
double learning_rate_at(const TrainConfig& train, std::size_t update);

/// One Adam update with bias correction and decoupled weight decay:
///   m ← β1·m + (1−β1)·g,  v ← β2·v + (1−β2)·g²
///   p ← p − lr·(m̂ / (√v̂ + ε) + wd·p)
/// Every gradient is checked before anything changes; a non-finite entry
/// throws NonFiniteGradient and leaves params and state untouched.
template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state, const ParamStore<T>& grads, const AdamHyper& hyper,
               double lr);

}  // namespace bpdec
