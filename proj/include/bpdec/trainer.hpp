// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpdec/checkpoint.hpp"
#include "bpdec/config.hpp"

namespace bpdec {

/// Which loss the loop optimizes. `baseline` is the control BERT pretrainer:
/// the decoder settings of the config are discarded before initialization.
enum class Objective { bpdec, baseline };

struct StepMetrics {
  std::size_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
  bool mix_draw = false;                   // decoder chosen for the batch's first sequence
  std::vector<std::size_t> unmask_counts;  // per decoder layer, summed over the batch

  /// `step=<n> loss=<f> lr=<f> mix_draw=<0|1> unmask_l<k>=<n>...`, reals in
  /// shortest round-trip form.
  std::string to_line() const;
};

struct PretrainJob {
  RunConfig config;
  std::vector<std::string> corpus;
  std::uint64_t seed = 0;
  Objective objective = Objective::bpdec;
  /// Directory for metrics.txt, vocab.txt and checkpoints; empty keeps
  /// everything in memory.
  std::filesystem::path out_dir;
  /// Continue a run from this checkpoint instead of initializing.
  std::optional<std::filesystem::path> resume_from;
  /// Stop after this step (0: run to config.train.steps). The schedule still
  /// spans config.train.steps.
  std::size_t stop_at = 0;
  std::function<void(const StepMetrics&)> on_step;
};

template <typename T>
struct PretrainResult {
  Checkpoint<T> checkpoint;
  std::vector<StepMetrics> metrics;
};

class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training loop: batch → forward loss → backward → Adam, one metrics record
/// per step. Without `resume_from`, the vocabulary is built from the corpus
/// (capped at config.model.vocab_size, which is then set to the actual
/// size) and parameters are initialized from the "init" stream of `seed`.
///
/// Files in `out_dir`: metrics.txt (one line per step), vocab.txt,
/// step-<NNNNNN>.ckpt every checkpoint_every steps, final.ckpt at the end.
/// A resumed run keeps the first `step` records of an existing metrics.txt
/// and appends after them.
template <typename T>
PretrainResult<T> pretrain(const PretrainJob& job);

/// Drops decoder and MLM-head parameters and optimizer state; the config
/// becomes decoder_layers = 0 with an empty schedule and default mix.
/// Throws CheckpointError when the encoder parameter set is incomplete, has
/// unexpected names or wrong shapes.
template <typename T>
Checkpoint<T> export_encoder(const Checkpoint<T>& ckpt);

/// True when the checkpoint holds any non-encoder parameter.
template <typename T>
bool has_pretraining_params(const Checkpoint<T>& ckpt);

}  // namespace bpdec
