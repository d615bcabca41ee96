// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/heatmap.hpp"

#include <cstdio>
#include <stdexcept>

#include "bpdec/gua.hpp"
#include "bpdec/masking.hpp"
#include "bpdec/model.hpp"
#include "bpdec/vocab.hpp"

namespace bpdec {

const char* to_string(PositionKind kind) {
  switch (kind) {
    case PositionKind::normal:
      return "normal";
    case PositionKind::masked:
      return "masked";
    case PositionKind::unmasked:
      return "unmasked";
    case PositionKind::pad:
      return "pad";
  }
  return "?";
}

std::string HeatmapDump::to_csv() const {
  const std::size_t s = annotations.size();
  std::string out = "pos";
  for (std::size_t j = 0; j < s; ++j) out += "," + std::to_string(j);
  out += "\ntoken";
  for (const auto& t : tokens) out += "," + t;
  out += "\nkind";
  for (auto k : annotations) out += std::string(",") + to_string(k);
  out += "\n";
  char buf[32];
  for (std::size_t i = 0; i < s; ++i) {
    out += std::to_string(i);
    for (std::size_t j = 0; j < s; ++j) {
      std::snprintf(buf, sizeof buf, ",%.6g", weights(i, j));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

template <typename T>
HeatmapDump attn_heatmap(const Checkpoint<T>& ckpt, const HeatmapRequest& request) {
  if (ckpt.vocab.empty()) throw std::invalid_argument("attn_heatmap: checkpoint has no vocabulary");
  ModelConfig model = ckpt.config.model;
  model.hidden_dropout = 0.0;
  model.attention_dropout = 0.0;
  const bool decoder = request.stack == HeatmapStack::decoder;
  const std::size_t depth = decoder ? model.decoder_layers : model.encoder_layers;
  if (decoder && (depth == 0 || !ckpt.params.contains("decoder.layer.0.attn.wq"))) {
    throw std::invalid_argument("attn_heatmap: decoder layer requested but the checkpoint has no decoder");
  }
  if (depth == 0) throw std::invalid_argument("attn_heatmap: the encoder has no layers");
  const std::size_t layer = request.layer == 0 ? depth : request.layer;
  if (layer > depth) {
    throw std::invalid_argument("attn_heatmap: layer " + std::to_string(layer) + " outside [1, " +
                                std::to_string(depth) + "]");
  }
  if (request.head && *request.head >= model.heads) {
    throw std::invalid_argument("attn_heatmap: head " + std::to_string(*request.head) + " outside [0, " +
                                std::to_string(model.heads) + ")");
  }

  const Vocab vocab(ckpt.vocab);
  const std::size_t s = model.max_seq_len;
  RngStreams rngs(request.seed);
  const auto ids = encode_line(request.line, vocab, s);
  auto seq = apply_mlm_masking(ids, vocab.size(), MaskingPolicy::from(ckpt.config.train), rngs["masking"]);
  if (!seq) throw std::invalid_argument("attn_heatmap: the line has no maskable token");
  MaskedBatch batch;
  batch.append(*seq);
  const auto base = batch.base_key_blocks();

  Graph<T> g(ckpt.params);
  AttentionTrace<T> enc_trace{true, {}};
  AttentionTrace<T> dec_trace{true, {}};
  Var<T> h = encoder_forward(g, embed(g, batch.input_ids, s, model), std::span<const KeyBlockVector>(base), model, {},
                             &enc_trace);
  UnmaskPlan plan;
  if (decoder) {
    plan = plan_unmasking(seq->masked, request.apply_gua ? model.gua : GuaSchedule{}, model.decoder_layers,
                          rngs["gua"]);
    const std::vector<std::vector<bool>> pads{seq->pad};
    decoder_forward(g, h, std::span<const KeyBlockVector>(base), std::span<const std::vector<bool>>(pads),
                    std::span<const UnmaskPlan>(&plan, 1), model, {}, &dec_trace);
  }

  const Tensor<T>& w = (decoder ? dec_trace : enc_trace).layers.at(layer - 1).at(0);  // {heads, s, s}
  HeatmapDump dump;
  dump.stack = request.stack;
  dump.layer = layer;
  dump.head = request.head;
  dump.weights = Tensor<double>({s, s});
  for (std::size_t hd = 0; hd < model.heads; ++hd) {
    if (request.head && *request.head != hd) continue;
    for (std::size_t k = 0; k < s * s; ++k) dump.weights.storage()[k] += static_cast<double>(w.data()[hd * s * s + k]);
  }
  if (!request.head) {
    for (auto& v : dump.weights.storage()) v /= static_cast<double>(model.heads);
  }
  for (std::size_t i = 0; i < s; ++i) {
    dump.tokens.push_back(vocab.token(batch.input_ids[i]));
    PositionKind kind = PositionKind::normal;
    if (seq->pad[i]) {
      kind = PositionKind::pad;
    } else if (seq->masked[i]) {
      kind = decoder && plan.layers[layer - 1][i] ? PositionKind::unmasked : PositionKind::masked;
    }
    dump.annotations.push_back(kind);
  }
  return dump;
}

template HeatmapDump attn_heatmap<float>(const Checkpoint<float>&, const HeatmapRequest&);
template HeatmapDump attn_heatmap<double>(const Checkpoint<double>&, const HeatmapRequest&);

}  // namespace bpdec
