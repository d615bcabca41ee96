// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>

#include "bpdec/config.hpp"

namespace bpdec {

/// pretrain: encoder + decoder + MLM head, forward and backward.
/// finetune: encoder + classifier, forward and backward (decoder dropped).
/// finetune_decoder_retained: as finetune but also running the decoder.
/// inference: encoder + classifier, forward only.
enum class FlopsPhase { pretrain, finetune, finetune_decoder_retained, inference };

const char* to_string(FlopsPhase phase);

/// Forward cost of one transformer block on s positions, counting a
/// multiply-add as 2 operations.
struct LayerFlops {
  double projections = 0.0;  // Q, K, V, O: 4 · 2·s·h²
  double attention = 0.0;    // scores and weighted sum: 2 · 2·s²·h
  double ffn = 0.0;          // two matrices: 2 · 2·s·h·ffn
  double total() const { return projections + attention + ffn; }
};

struct FlopsReport {
  FlopsPhase phase = FlopsPhase::pretrain;
  std::size_t seq_len = 0;
  LayerFlops layer;
  std::size_t layers = 0;    // blocks counted for the phase
  double blocks = 0.0;       // layers · layer.total()
  double head = 0.0;         // MLM head (pretrain) or classifier, forward
  double forward = 0.0;      // blocks + head
  double backward = 0.0;     // 2 · forward, 0 for inference
  double total = 0.0;        // forward + backward
};

/// Classifier width used for finetune and inference phases.
inline constexpr std::size_t kFlopsClassifierLabels = 2;

/// Analytic cost per data point (one sequence of `seq_len` tokens). The MLM
/// head runs on round(0.15 · s) masked rows: transform 2·n·h² plus the
/// tied output projection 2·n·h·V. Embedding lookups, LayerNorm, softmax
/// and activations are not counted.
FlopsReport flops_estimate(const ModelConfig& config, FlopsPhase phase, std::size_t seq_len);

/// `section: value` lines for every phase of `config`; with a baseline,
/// also the per-phase ratios and both readings of the finetune ratio.
std::string flops_report_text(const ModelConfig& config, std::size_t seq_len, const ModelConfig* baseline = nullptr);

}  // namespace bpdec
