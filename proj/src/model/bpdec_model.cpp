// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/model.hpp"

#include <stdexcept>

namespace bpdec {

void MixPolicy::validate() const {
  if (!(p_decoder >= 0.0 && p_decoder <= 1.0)) {
    throw std::invalid_argument("mix probability must lie in [0, 1], got " + std::to_string(p_decoder));
  }
}

namespace {

template <typename T>
Var<T> final_ln(Graph<T>& g, Var<T> x, const std::string& prefix, const ModelConfig& config) {
  return ops::layer_norm(x, g.param(prefix + ".gamma"), g.param(prefix + ".beta"),
                         static_cast<T>(config.layer_norm_eps));
}

std::vector<bool> all_active(std::size_t n) { return std::vector<bool>(n, true); }

}  // namespace

template <typename T>
Var<T> decoder_forward(Graph<T>& g, Var<T> h_enc, std::span<const KeyBlockVector> base,
                       std::span<const std::vector<bool>> pads, std::span<const UnmaskPlan> plans,
                       const ModelConfig& config, const ForwardContext& ctx, AttentionTrace<T>* trace) {
  if (pads.size() != base.size() || plans.size() != base.size()) {
    throw std::invalid_argument("decoder_forward: need one pad vector and one plan per sequence");
  }
  for (const auto& plan : plans) {
    if (plan.decoder_layers() != config.decoder_layers) {
      throw std::invalid_argument("decoder_forward: plan has " + std::to_string(plan.decoder_layers()) +
                                  " layers, config has " + std::to_string(config.decoder_layers));
    }
  }
  if (trace != nullptr && trace->enabled) trace->layers.assign(config.decoder_layers, {});
  Var<T> x = h_enc;
  std::vector<KeyBlockVector> blocks(base.size());
  for (std::size_t l = 0; l < config.decoder_layers; ++l) {
    for (std::size_t b = 0; b < base.size(); ++b) blocks[b] = decoder_key_block(base[b], pads[b], plans[b], l);
    std::vector<Tensor<T>>* weights = trace != nullptr && trace->enabled ? &trace->layers[l] : nullptr;
    x = transformer_block(g, x, std::span<const KeyBlockVector>(blocks), "decoder.layer." + std::to_string(l), config,
                          ctx, weights);
  }
  if (config.ln_placement == LnPlacement::pre && config.decoder_layers > 0) {
    x = final_ln(g, x, "decoder.final_ln", config);
  }
  return x;
}

template <typename T>
Var<T> mix_outputs(Var<T> h_enc, Var<T> h_dec, const MixPolicy& policy, std::size_t seq_len, Rng& rng,
                   std::vector<bool>* draws) {
  policy.validate();
  if (h_enc.shape() != h_dec.shape()) {
    throw std::invalid_argument("mix_outputs: shape mismatch " + shape_string(h_enc.shape()) + " vs " +
                                shape_string(h_dec.shape()));
  }
  const std::size_t rows = h_enc.value().rows();
  if (seq_len == 0 || rows % seq_len != 0) throw std::invalid_argument("mix_outputs: rows not a multiple of seq_len");
  std::vector<bool> take_dec(rows / seq_len);
  for (std::size_t b = 0; b < take_dec.size(); ++b) take_dec[b] = rng.bernoulli(policy.p_decoder);
  if (draws != nullptr) draws->insert(draws->end(), take_dec.begin(), take_dec.end());
  return ops::select_blocks(h_enc, h_dec, take_dec, seq_len);
}

template <typename T>
Var<T> mlm_head(Graph<T>& g, Var<T> x, const ModelConfig& config) {
  Var<T> t = ops::add_bias(ops::matmul(x, g.param("mlm_head.transform.w")), g.param("mlm_head.transform.b"));
  t = final_ln(g, ops::gelu(t), "mlm_head.ln", config);
  Var<T> logits = ops::matmul(t, ops::transpose(g.param("embeddings.token")));
  return ops::add_bias(logits, g.param("mlm_head.bias"));
}

template <typename T>
PretrainOutput<T> pretrain_forward_loss(Graph<T>& g, const MaskedBatch& batch, const ModelConfig& config,
                                        RngStreams& rngs, const PretrainOptions& options) {
  const bool dropout = config.hidden_dropout > 0.0 || config.attention_dropout > 0.0;
  ForwardContext ctx;
  if (dropout) ctx.rng = &rngs["dropout"];

  PretrainOutput<T> out;
  out.encoder_attention.enabled = options.capture_attention;
  out.decoder_attention.enabled = options.capture_attention;

  const auto base = batch.base_key_blocks();
  Var<T> x = embed(g, batch.input_ids, batch.seq_len, config, ctx);
  Var<T> h = encoder_forward(g, x, std::span<const KeyBlockVector>(base), config, ctx, &out.encoder_attention);

  if (config.decoder_layers > 0) {
    std::vector<std::vector<bool>> pads(batch.batch);
    out.plans.reserve(batch.batch);
    const GuaSchedule none;
    Rng& gua = rngs["gua"];
    for (std::size_t b = 0; b < batch.batch; ++b) {
      pads[b] = batch.pad_row(b);
      out.plans.push_back(
          plan_unmasking(batch.masked_row(b), options.apply_gua ? config.gua : none, config.decoder_layers, gua));
    }
    out.unmask_counts.assign(config.decoder_layers, 0);
    for (const auto& plan : out.plans) {
      for (std::size_t l = 0; l < config.decoder_layers; ++l) out.unmask_counts[l] += plan.count(l);
    }
    Var<T> h_dec = decoder_forward(g, h, std::span<const KeyBlockVector>(base),
                                   std::span<const std::vector<bool>>(pads), std::span<const UnmaskPlan>(out.plans),
                                   config, ctx, &out.decoder_attention);
    const MixPolicy mix{options.mix_override.value_or(config.mix_decoder_prob)};
    h = mix_outputs(h, h_dec, mix, batch.seq_len, rngs["mix"], &out.mix_draws);
  }

  const auto rows = batch.masked_indices();
  out.logits = mlm_head(g, ops::gather_rows(h, rows), config);
  out.loss = ops::cross_entropy_masked(out.logits, batch.masked_labels(), all_active(rows.size()));
  return out;
}

template <typename T>
Var<T> baseline_forward_loss(Graph<T>& g, const MaskedBatch& batch, const ModelConfig& config, RngStreams& rngs) {
  ForwardContext ctx;
  if (config.hidden_dropout > 0.0 || config.attention_dropout > 0.0) ctx.rng = &rngs["dropout"];
  const auto blocks = batch.base_key_blocks();
  Var<T> h = embed(g, batch.input_ids, batch.seq_len, config, ctx);
  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    h = transformer_block(g, h, std::span<const KeyBlockVector>(blocks), "encoder.layer." + std::to_string(l), config,
                          ctx);
  }
  if (config.ln_placement == LnPlacement::pre && config.encoder_layers > 0) {
    h = final_ln(g, h, "encoder.final_ln", config);
  }
  const auto rows = batch.masked_indices();
  Var<T> logits = mlm_head(g, ops::gather_rows(h, rows), config);
  return ops::cross_entropy_masked(logits, batch.masked_labels(), all_active(rows.size()));
}

#define BPDEC_INSTANTIATE_MODEL(T)                                                                                   \
  template Var<T> decoder_forward<T>(Graph<T>&, Var<T>, std::span<const KeyBlockVector>,                            \
                                     std::span<const std::vector<bool>>, std::span<const UnmaskPlan>,               \
                                     const ModelConfig&, const ForwardContext&, AttentionTrace<T>*);                \
  template Var<T> mix_outputs<T>(Var<T>, Var<T>, const MixPolicy&, std::size_t, Rng&, std::vector<bool>*);          \
  template Var<T> mlm_head<T>(Graph<T>&, Var<T>, const ModelConfig&);                                               \
  template PretrainOutput<T> pretrain_forward_loss<T>(Graph<T>&, const MaskedBatch&, const ModelConfig&,           \
                                                      RngStreams&, const PretrainOptions&);                         \
  template Var<T> baseline_forward_loss<T>(Graph<T>&, const MaskedBatch&, const ModelConfig&, RngStreams&);

BPDEC_INSTANTIATE_MODEL(float)
BPDEC_INSTANTIATE_MODEL(double)

#undef BPDEC_INSTANTIATE_MODEL

}  // namespace bpdec
