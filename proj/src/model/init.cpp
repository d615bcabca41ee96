// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/model.hpp"

namespace bpdec {

namespace {

void add_block(std::vector<ParamSpec>& out, const std::string& prefix, const ModelConfig& c) {
  const std::size_t h = c.hidden;
  for (const char* p : {"q", "k", "v", "o"}) {
    out.push_back({prefix + ".attn.w" + p, {h, h}, InitKind::normal});
    out.push_back({prefix + ".attn.b" + p, {h}, InitKind::zeros});
  }
  out.push_back({prefix + ".ln1.gamma", {h}, InitKind::ones});
  out.push_back({prefix + ".ln1.beta", {h}, InitKind::zeros});
  out.push_back({prefix + ".ffn.w1", {h, c.ffn}, InitKind::normal});
  out.push_back({prefix + ".ffn.b1", {c.ffn}, InitKind::zeros});
  out.push_back({prefix + ".ffn.w2", {c.ffn, h}, InitKind::normal});
  out.push_back({prefix + ".ffn.b2", {h}, InitKind::zeros});
  out.push_back({prefix + ".ln2.gamma", {h}, InitKind::ones});
  out.push_back({prefix + ".ln2.beta", {h}, InitKind::zeros});
}

void add_ln(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t h) {
  out.push_back({prefix + ".gamma", {h}, InitKind::ones});
  out.push_back({prefix + ".beta", {h}, InitKind::zeros});
}

template <typename T>
ParamStore<T> fill(const std::vector<ParamSpec>& layout, Rng& rng, double stddev) {
  ParamStore<T> store;
  for (const auto& spec : layout) {
    Tensor<T> t(spec.shape);
    switch (spec.kind) {
      case InitKind::normal:
        for (auto& v : t.storage()) v = static_cast<T>(rng.truncated_normal(stddev));
        break;
      case InitKind::ones:
        for (auto& v : t.storage()) v = T(1);
        break;
      case InitKind::zeros:
        break;
    }
    store.insert(spec.name, std::move(t));
  }
  return store;
}

}  // namespace

std::vector<ParamSpec> param_layout(const ModelConfig& config, bool pretraining) {
  config.validate();
  const std::size_t h = config.hidden;
  std::vector<ParamSpec> out;
  out.push_back({"embeddings.token", {config.vocab_size, h}, InitKind::normal});
  out.push_back({"embeddings.position", {config.max_seq_len, h}, InitKind::normal});
  out.push_back({"embeddings.segment", {2, h}, InitKind::normal});
  add_ln(out, "embeddings.ln", h);
  for (std::size_t l = 0; l < config.encoder_layers; ++l) add_block(out, "encoder.layer." + std::to_string(l), config);
  if (config.ln_placement == LnPlacement::pre && config.encoder_layers > 0) add_ln(out, "encoder.final_ln", h);
  if (!pretraining) return out;
  for (std::size_t l = 0; l < config.decoder_layers; ++l) add_block(out, "decoder.layer." + std::to_string(l), config);
  if (config.ln_placement == LnPlacement::pre && config.decoder_layers > 0) add_ln(out, "decoder.final_ln", h);
  out.push_back({"mlm_head.transform.w", {h, h}, InitKind::normal});
  out.push_back({"mlm_head.transform.b", {h}, InitKind::zeros});
  add_ln(out, "mlm_head.ln", h);
  out.push_back({"mlm_head.bias", {config.vocab_size}, InitKind::zeros});
  return out;
}

bool is_encoder_param(std::string_view name) {
  return name.starts_with("embeddings.") || name.starts_with("encoder.");
}

template <typename T>
ParamStore<T> init_params(const ModelConfig& config, Rng& rng, double stddev) {
  return fill<T>(param_layout(config, true), rng, stddev);
}

template <typename T>
ParamStore<T> init_encoder_params(const ModelConfig& config, Rng& rng, double stddev) {
  return fill<T>(param_layout(config, false), rng, stddev);
}

template <typename T>
ParamStore<T> init_params(const ModelConfig& config, std::uint64_t seed, double stddev) {
  Rng rng(seed, "init");
  return init_params<T>(config, rng, stddev);
}

template ParamStore<float> init_params<float>(const ModelConfig&, Rng&, double);
template ParamStore<double> init_params<double>(const ModelConfig&, Rng&, double);
template ParamStore<float> init_encoder_params<float>(const ModelConfig&, Rng&, double);
template ParamStore<double> init_encoder_params<double>(const ModelConfig&, Rng&, double);
template ParamStore<float> init_params<float>(const ModelConfig&, std::uint64_t, double);
template ParamStore<double> init_params<double>(const ModelConfig&, std::uint64_t, double);

}  // namespace bpdec
