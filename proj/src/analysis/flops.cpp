// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/flops.hpp"

#include <cmath>
#include <cstdio>

namespace bpdec {

const char* to_string(FlopsPhase phase) {
  switch (phase) {
    case FlopsPhase::pretrain:
      return "pretrain";
    case FlopsPhase::finetune:
      return "finetune";
    case FlopsPhase::finetune_decoder_retained:
      return "finetune_decoder_retained";
    case FlopsPhase::inference:
      return "inference";
  }
  return "?";
}

FlopsReport flops_estimate(const ModelConfig& config, FlopsPhase phase, std::size_t seq_len) {
  const double s = static_cast<double>(seq_len);
  const double h = static_cast<double>(config.hidden);
  const double f = static_cast<double>(config.ffn);
  const double v = static_cast<double>(config.vocab_size);

  FlopsReport r;
  r.phase = phase;
  r.seq_len = seq_len;
  r.layer.projections = 8.0 * s * h * h;
  r.layer.attention = 4.0 * s * s * h;
  r.layer.ffn = 4.0 * s * h * f;

  const bool with_decoder = phase == FlopsPhase::pretrain || phase == FlopsPhase::finetune_decoder_retained;
  r.layers = config.encoder_layers + (with_decoder ? config.decoder_layers : 0);
  r.blocks = static_cast<double>(r.layers) * r.layer.total();
  if (phase == FlopsPhase::pretrain) {
    const double n = std::round(0.15 * s);
    r.head = 2.0 * n * h * h + 2.0 * n * h * v;
  } else {
    r.head = 2.0 * h * static_cast<double>(kFlopsClassifierLabels);
  }
  r.forward = r.blocks + r.head;
  r.backward = phase == FlopsPhase::inference ? 0.0 : 2.0 * r.forward;
  r.total = r.forward + r.backward;
  return r;
}

namespace {

void line(std::string& out, const std::string& key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", value);
  out += key + ": " + buf + "\n";
}

void ratio_line(std::string& out, const std::string& key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  out += key + ": " + buf + "\n";
}

}  // namespace

std::string flops_report_text(const ModelConfig& config, std::size_t seq_len, const ModelConfig* baseline) {
  std::string out;
  out += "convention: 2 flops per multiply-add; backward = 2 x forward; per data point\n";
  out += "layer_forward: 8*s*h^2 + 4*s^2*h + 4*s*h*ffn\n";
  out += "mlm_head_forward: 2*n*h^2 + 2*n*h*V with n = round(0.15*s)\n";
  out += "seq_len: " + std::to_string(seq_len) + "\n";
  out += "encoder_layers: " + std::to_string(config.encoder_layers) + "\n";
  out += "decoder_layers: " + std::to_string(config.decoder_layers) + "\n";
  const FlopsReport pre = flops_estimate(config, FlopsPhase::pretrain, seq_len);
  line(out, "layer.projections", pre.layer.projections);
  line(out, "layer.attention", pre.layer.attention);
  line(out, "layer.ffn", pre.layer.ffn);
  line(out, "layer.total", pre.layer.total());
  for (FlopsPhase phase : {FlopsPhase::pretrain, FlopsPhase::finetune, FlopsPhase::finetune_decoder_retained,
                           FlopsPhase::inference}) {
    const FlopsReport r = flops_estimate(config, phase, seq_len);
    const std::string p = to_string(phase);
    out += p + ".layers: " + std::to_string(r.layers) + "\n";
    line(out, p + ".blocks", r.blocks);
    line(out, p + ".head", r.head);
    line(out, p + ".forward", r.forward);
    line(out, p + ".backward", r.backward);
    line(out, p + ".total", r.total);
  }
  if (baseline != nullptr) {
    auto total = [&](const ModelConfig& c, FlopsPhase phase) { return flops_estimate(c, phase, seq_len).total; };
    ratio_line(out, "ratio.pretrain", total(config, FlopsPhase::pretrain) / total(*baseline, FlopsPhase::pretrain));
    ratio_line(out, "ratio.finetune_decoder_dropped",
               total(config, FlopsPhase::finetune) / total(*baseline, FlopsPhase::finetune));
    ratio_line(out, "ratio.finetune_decoder_retained",
               total(config, FlopsPhase::finetune_decoder_retained) / total(*baseline, FlopsPhase::finetune));
    ratio_line(out, "ratio.inference", total(config, FlopsPhase::inference) / total(*baseline, FlopsPhase::inference));
    out += "note: a dropped decoder leaves finetuning cost unchanged; keeping it costs the retained ratio. "
           "Both readings are listed because published finetuning figures disagree on which applies.\n";
  }
  return out;
}

}  // namespace bpdec
