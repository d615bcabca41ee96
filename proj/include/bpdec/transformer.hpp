// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bpdec/config.hpp"
#include "bpdec/graph.hpp"
#include "bpdec/rng.hpp"

namespace bpdec {

/// Per-position flag over one sequence: true means the position may not be
/// attended TO (its key column is blocked). Query rows are never blocked.
struct KeyBlockVector {
  std::vector<bool> blocked;

  KeyBlockVector() = default;
  explicit KeyBlockVector(std::vector<bool> b) : blocked(std::move(b)) {}
  static KeyBlockVector none(std::size_t n) { return KeyBlockVector(std::vector<bool>(n, false)); }

  std::size_t size() const noexcept { return blocked.size(); }
  bool operator[](std::size_t i) const { return blocked[i]; }
  std::size_t count_blocked() const;
  bool any_unblocked() const { return count_blocked() < blocked.size(); }

  bool operator==(const KeyBlockVector&) const = default;
};

/// Additive logit on blocked key columns. exp() of it underflows to exactly
/// zero in both float and double, so blocked weights are exactly 0.
inline constexpr double kBlockedLogit = -1e9;

/// Training-time stochasticity. Dropout rates come from ModelConfig; with a
/// null rng or zero rates no dropout records are emitted at all.
/// `attention_dropout` is only read by `masked_attention` called directly.
struct ForwardContext {
  Rng* rng = nullptr;
  double attention_dropout = 0.0;
};

/// Attention weights captured during a forward pass:
/// `layers[l][seq]` has shape {heads, s, s} (pre-dropout softmax output).
template <typename T>
struct AttentionTrace {
  bool enabled = false;
  std::vector<std::vector<Tensor<T>>> layers;
};

/// Hidden states are stored batch-major as [(batch · s) × hidden]; the
/// batch size is `blocks.size()` and s is the length of each block vector.

/// Token + learned absolute position + segment (always 0) embeddings,
/// followed by LayerNorm. `ids.size()` must be a multiple of `seq_len`.
template <typename T>
Var<T> embed(Graph<T>& g, const std::vector<std::int32_t>& ids, std::size_t seq_len, const ModelConfig& config,
             const ForwardContext& ctx = {});

/// softmax(Q·Kᵀ/√d + blocked) · V per sequence and head, as one recorded
/// operation with a hand-written gradient.
template <typename T>
Var<T> masked_attention(Var<T> q, Var<T> k, Var<T> v, std::span<const KeyBlockVector> blocks, std::size_t heads,
                        const ForwardContext& ctx = {}, std::vector<Tensor<T>>* weights = nullptr);

/// Projections + masked attention + output projection using the
/// parameters under `prefix` (e.g. "encoder.layer.0.attn").
template <typename T>
Var<T> multi_head_attention(Graph<T>& g, Var<T> x, std::span<const KeyBlockVector> blocks, const std::string& prefix,
                            const ModelConfig& config, const ForwardContext& ctx = {},
                            std::vector<Tensor<T>>* weights = nullptr);

/// Attention and FFN sublayers with residuals; LayerNorm after each
/// residual add (post) or before each sublayer (pre).
template <typename T>
Var<T> transformer_block(Graph<T>& g, Var<T> x, std::span<const KeyBlockVector> blocks, const std::string& prefix,
                         const ModelConfig& config, const ForwardContext& ctx = {},
                         std::vector<Tensor<T>>* weights = nullptr);

/// `config.encoder_layers` blocks sharing one key-block per sequence.
/// Pre-LN stacks end with "encoder.final_ln".
template <typename T>
Var<T> encoder_forward(Graph<T>& g, Var<T> embedded, std::span<const KeyBlockVector> blocks, const ModelConfig& config,
                       const ForwardContext& ctx = {}, AttentionTrace<T>* trace = nullptr);

/// Parameter names of one block under `prefix` ("encoder.layer.0").
std::vector<std::string> block_param_names(const std::string& prefix);

}  // namespace bpdec
