// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bpdec/checkpoint.hpp"
#include "bpdec/synth.hpp"

namespace bpdec {

/// Sequence classification from the final-layer [CLS] state.
struct FinetuneTask {
  std::size_t labels = 2;
  std::vector<LabeledLine> train;
  std::vector<LabeledLine> dev;
  std::size_t epochs = 5;
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  double warmup_frac = 0.1;
  void validate() const;
};

/// Reads "label<TAB>text" lines; every fifth line (index % 5 == 4) goes to
/// dev, the rest to train.
FinetuneTask load_classification_task(const std::filesystem::path& path);
FinetuneTask split_classification_task(std::span<const LabeledLine> rows);

template <typename T>
struct FinetuneResult {
  double train_accuracy = 0.0;
  double dev_accuracy = 0.0;
  std::vector<double> epoch_losses;  // mean training loss per epoch
  ParamStore<T> params;              // encoder + "classifier.w" / "classifier.b"
  std::string graph_signature;       // forward+loss graph of the first step
};

/// Attaches a fresh linear head to the [CLS] state and trains encoder and
/// head with Adam. No position is masked; only padding is blocked. Rejects
/// checkpoints that still carry decoder or MLM-head parameters.
template <typename T>
FinetuneResult<T> finetune_classify(const Checkpoint<T>& encoder_ckpt, const FinetuneTask& task, std::uint64_t seed);

struct ClozeResult {
  std::size_t masked = 0;
  std::size_t correct = 0;
  double accuracy() const { return masked ? static_cast<double>(correct) / static_cast<double>(masked) : 0.0; }
};

/// Masks held-out lines with the training policy under `seed` and counts
/// argmax hits at masked positions. Checkpoints with an MLM head run the
/// full pretraining forward (decoder output selected, unmask plans drawn
/// from `seed`); encoder-only checkpoints score H_enc · Eᵀ.
template <typename T>
ClozeResult evaluate_cloze(const Checkpoint<T>& ckpt, std::span<const std::string> lines, std::uint64_t seed);

}  // namespace bpdec
