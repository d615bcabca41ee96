// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace bpdec {

double learning_rate_at(const TrainConfig& train, std::size_t update) {
  const auto steps = static_cast<double>(train.steps);
  const double warmup = std::round(train.warmup_frac * steps);
  const auto t = static_cast<double>(update);
  if (t <= 0.0) return 0.0;
  if (t <= warmup) return train.learning_rate * t / warmup;
  return train.learning_rate * std::max(0.0, (steps + 1.0 - t) / (steps + 1.0 - warmup));
}

template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state, const ParamStore<T>& grads, const AdamHyper& hyper,
               double lr) {
  for (const auto& [name, p] : params) {
    if (!grads.contains(name)) throw std::invalid_argument("adam_step: no gradient for '" + name + "'");
    const auto& g = grads.at(name);
    if (g.shape() != p.shape() || state.m.at(name).shape() != p.shape() || state.v.at(name).shape() != p.shape()) {
      throw std::invalid_argument("adam_step: shape mismatch for '" + name + "'");
    }
    for (T x : g.values()) {
      if (!std::isfinite(x)) throw NonFiniteGradient(name);
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(hyper.beta1);
  const T b2 = static_cast<T>(hyper.beta2);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(hyper.beta1, t)));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(hyper.beta2, t)));
  const T eps = static_cast<T>(hyper.eps);
  const T rate = static_cast<T>(lr);
  const T decay = static_cast<T>(hyper.weight_decay);

  for (auto& [name, p] : params) {
    auto& pv = p.storage();
    const auto& gv = grads.at(name).storage();
    auto& mv = state.m.at(name).storage();
    auto& vv = state.v.at(name).storage();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      mv[i] = b1 * mv[i] + (T(1) - b1) * gv[i];
      vv[i] = b2 * vv[i] + (T(1) - b2) * gv[i] * gv[i];
      const T update = (mv[i] * c1) / (std::sqrt(vv[i] * c2) + eps) + decay * pv[i];
      pv[i] -= rate * update;
    }
  }
}

template void adam_step<float>(ParamStore<float>&, AdamState<float>&, const ParamStore<float>&, const AdamHyper&,
                               double);
template void adam_step<double>(ParamStore<double>&, AdamState<double>&, const ParamStore<double>&,
                                const AdamHyper&, double);

}  // namespace bpdec
