// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "bpdec/config.hpp"
#include "bpdec/rng.hpp"
#include "bpdec/transformer.hpp"

namespace bpdec {

/// Per decoder layer (0-based here, 1-based in the schedule), the masked
/// positions whose keys are unblocked at that layer.
struct UnmaskPlan {
  std::vector<std::vector<bool>> layers;

  std::size_t decoder_layers() const noexcept { return layers.size(); }
  std::size_t count(std::size_t layer) const;
  bool operator==(const UnmaskPlan&) const = default;
};

/// ceil(rate · m); products within 1e-9 above an integer round down so that
/// decimal rates such as 0.3 · 10 give 3.
std::size_t unmask_count(double rate, std::size_t m);

/// Samples one uniform permutation of the masked positions. A scheduled
/// layer with rate r unmasks the first ceil(r · m) entries of it, so the
/// sets are nested. Layers after a scheduled layer inherit its set until
/// the next scheduled one; layers before the first scheduled layer unmask
/// nothing. An empty schedule or m = 0 draws nothing from `rng`.
UnmaskPlan plan_unmasking(const std::vector<bool>& masked, const GuaSchedule& schedule, std::size_t decoder_layers,
                          Rng& rng);

/// Key-block used by decoder layer `layer` (0-based): the base block minus
/// that layer's unmask set. Padding stays blocked.
KeyBlockVector decoder_key_block(const KeyBlockVector& base, const std::vector<bool>& pad, const UnmaskPlan& plan,
                                 std::size_t layer);

}  // namespace bpdec
