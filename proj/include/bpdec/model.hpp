// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bpdec/config.hpp"
#include "bpdec/graph.hpp"
#include "bpdec/gua.hpp"
#include "bpdec/masking.hpp"
#include "bpdec/rng.hpp"
#include "bpdec/transformer.hpp"

namespace bpdec {

/// Per-sequence selection between encoder and decoder outputs.
struct MixPolicy {
  double p_decoder = 0.8;
  void validate() const;
};

/// Runs `config.decoder_layers` blocks named "decoder.layer.<l>". Layer l of
/// sequence b uses decoder_key_block(base[b], pads[b], plans[b], l). Pre-LN
/// stacks end with "decoder.final_ln". Zero layers return `h_enc` itself.
template <typename T>
Var<T> decoder_forward(Graph<T>& g, Var<T> h_enc, std::span<const KeyBlockVector> base,
                       std::span<const std::vector<bool>> pads, std::span<const UnmaskPlan> plans,
                       const ModelConfig& config, const ForwardContext& ctx = {}, AttentionTrace<T>* trace = nullptr);

/// One Bernoulli(p_decoder) draw per sequence (blocks of `seq_len` rows):
/// decoder rows on success, encoder rows otherwise. Draws are appended to
/// `draws` when given.
template <typename T>
Var<T> mix_outputs(Var<T> h_enc, Var<T> h_dec, const MixPolicy& policy, std::size_t seq_len, Rng& rng,
                   std::vector<bool>* draws = nullptr);

/// LayerNorm(GELU(x·W + b)) · Eᵀ + bias, with E = "embeddings.token".
template <typename T>
Var<T> mlm_head(Graph<T>& g, Var<T> x, const ModelConfig& config);

/// Knobs for evaluation-time forwards.
struct PretrainOptions {
  std::optional<double> mix_override;  // replaces config.mix_decoder_prob
  bool apply_gua = true;               // false: every decoder layer keeps the base block
  bool capture_attention = false;
};

template <typename T>
struct PretrainOutput {
  Var<T> loss;
  Var<T> logits;                           // [masked rows × V], rows in masked_indices() order
  std::vector<std::size_t> unmask_counts;  // per decoder layer, summed over the batch
  std::vector<bool> mix_draws;             // per sequence; empty without a decoder
  std::vector<UnmaskPlan> plans;           // per sequence; empty without a decoder
  AttentionTrace<T> encoder_attention;
  AttentionTrace<T> decoder_attention;
};

/// embed → encoder (base block) → unmask plans → decoder → mix → gather
/// masked rows → MLM head → masked cross-entropy. Randomness comes from the
/// "gua", "mix" and (when dropout is enabled) "dropout" streams. Without
/// decoder layers no plan or mix is drawn.
template <typename T>
PretrainOutput<T> pretrain_forward_loss(Graph<T>& g, const MaskedBatch& batch, const ModelConfig& config,
                                        RngStreams& rngs, const PretrainOptions& options = {});

/// Control BERT pretrainer: embed → encoder blocks → MLM head → loss, with
/// no decoder, plan or mix. Decoder settings in `config` are ignored.
template <typename T>
Var<T> baseline_forward_loss(Graph<T>& g, const MaskedBatch& batch, const ModelConfig& config, RngStreams& rngs);

/// How init_params fills a tensor.
enum class InitKind { normal, zeros, ones };

struct ParamSpec {
  std::string name;
  Shape shape;
  InitKind kind = InitKind::normal;
};

/// Parameter layout in initialization order: embeddings, encoder blocks,
/// encoder final LN (pre-LN only), then, when `pretraining` holds, decoder
/// blocks, decoder final LN and the MLM head.
std::vector<ParamSpec> param_layout(const ModelConfig& config, bool pretraining);

/// True for names under "embeddings." or "encoder.".
bool is_encoder_param(std::string_view name);

/// Truncated normal(σ = `stddev`, cut at 2σ) for matrices and embedding
/// tables, zeros for biases, ones for LayerNorm gains. Tensors are filled in
/// layout order from `rng`.
template <typename T>
ParamStore<T> init_params(const ModelConfig& config, Rng& rng, double stddev = 0.02);

/// Same draws restricted to embeddings + encoder: a vanilla BERT encoder.
template <typename T>
ParamStore<T> init_encoder_params(const ModelConfig& config, Rng& rng, double stddev = 0.02);

/// init_params with the "init" substream of `seed`.
template <typename T>
ParamStore<T> init_params(const ModelConfig& config, std::uint64_t seed, double stddev = 0.02);

}  // namespace bpdec
