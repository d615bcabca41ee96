// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bpdec/checkpoint.hpp"
#include "bpdec/tensor.hpp"

namespace bpdec {

enum class HeatmapStack { encoder, decoder };

enum class PositionKind { normal, masked, unmasked, pad };

const char* to_string(PositionKind kind);

struct HeatmapRequest {
  std::string line;
  HeatmapStack stack = HeatmapStack::encoder;
  std::size_t layer = 0;             // 1-based; 0 selects the last layer of the stack
  std::optional<std::size_t> head;   // 0-based; empty averages over heads
  bool apply_gua = true;
  std::uint64_t seed = 0;
};

struct HeatmapDump {
  HeatmapStack stack = HeatmapStack::encoder;
  std::size_t layer = 0;  // 1-based
  std::optional<std::size_t> head;
  std::vector<std::string> tokens;
  std::vector<PositionKind> annotations;
  Tensor<double> weights;  // [s × s], row = query, column = key

  /// Row "pos" with column indices, rows "token" and "kind", then one row
  /// per query position: index followed by weights with 6 significant
  /// digits.
  std::string to_csv() const;
};

/// Masks `line` with the checkpoint's policy under `seed`, runs the encoder
/// and, for decoder requests, the decoder with an unmask plan drawn from the
/// same seed (or an empty schedule when apply_gua is false), and captures
/// one layer's attention. Masked keys unblocked at the chosen decoder layer
/// are annotated "unmasked".
template <typename T>
HeatmapDump attn_heatmap(const Checkpoint<T>& ckpt, const HeatmapRequest& request);

}  // namespace bpdec
