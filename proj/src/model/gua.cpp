// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/gua.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bpdec {

std::size_t UnmaskPlan::count(std::size_t layer) const {
  const auto& l = layers.at(layer);
  return static_cast<std::size_t>(std::count(l.begin(), l.end(), true));
}

std::size_t unmask_count(double rate, std::size_t m) {
  const double product = rate * static_cast<double>(m);
  const auto n = static_cast<std::size_t>(std::ceil(product - 1e-9));
  return std::min(n, m);
}

UnmaskPlan plan_unmasking(const std::vector<bool>& masked, const GuaSchedule& schedule, std::size_t decoder_layers,
                          Rng& rng) {
  schedule.validate(decoder_layers);
  const std::size_t s = masked.size();
  UnmaskPlan plan;
  plan.layers.assign(decoder_layers, std::vector<bool>(s, false));

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < s; ++i)
    if (masked[i]) order.push_back(i);
  if (schedule.empty() || order.empty()) return plan;
  rng.shuffle(order.begin(), order.end());

  std::size_t current = 0;
  std::size_t next_entry = 0;
  for (std::size_t l = 0; l < decoder_layers; ++l) {
    if (next_entry < schedule.entries.size() && schedule.entries[next_entry].layer == l + 1) {
      current = unmask_count(schedule.entries[next_entry].rate, order.size());
      ++next_entry;
    }
    for (std::size_t i = 0; i < current; ++i) plan.layers[l][order[i]] = true;
  }
  return plan;
}

KeyBlockVector decoder_key_block(const KeyBlockVector& base, const std::vector<bool>& pad, const UnmaskPlan& plan,
                                 std::size_t layer) {
  const auto& unmasked = plan.layers.at(layer);
  if (unmasked.size() != base.size() || pad.size() != base.size()) {
    throw std::invalid_argument("decoder_key_block: length mismatch");
  }
  std::vector<bool> blocked(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) blocked[i] = pad[i] || (base[i] && !unmasked[i]);
  return KeyBlockVector(std::move(blocked));
}

}  // namespace bpdec
