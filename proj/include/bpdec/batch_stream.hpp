// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bpdec/masking.hpp"
#include "bpdec/rng.hpp"
#include "bpdec/vocab.hpp"

namespace bpdec {

/// Deterministic stream of masked batches over an encoded corpus.
///
/// Epoch order: at the start of every epoch one value is drawn from the
/// "data" stream and used to seed a fresh Rng("epoch-order") that shuffles
/// the line indices. Batches take consecutive lines of that order; the
/// incomplete tail of an epoch is dropped. Masking draws come from the
/// "masking" stream. Both streams live in the caller's RngStreams so a
/// checkpoint of those plus `position()` resumes the exact sequence.
class BatchStream {
 public:
  struct Position {
    std::uint64_t epoch = 0;
    std::size_t cursor = 0;        // index into the epoch order
    std::uint64_t epoch_seed = 0;  // seed of the current epoch's order
    bool started = false;
    bool operator==(const Position&) const = default;
  };

  /// Lines without a maskable token are skipped (see `skipped_lines`).
  /// Throws when fewer than `batch_size` usable lines remain.
  BatchStream(std::span<const std::string> lines, const Vocab& vocab, std::size_t seq_len, std::size_t batch_size,
              MaskingPolicy policy);

  MaskedBatch next(RngStreams& rngs);

  Position position() const noexcept { return pos_; }
  void seek(const Position& pos);

  std::size_t usable_lines() const noexcept { return encoded_.size(); }
  std::size_t skipped_lines() const noexcept { return skipped_; }
  std::size_t batches_per_epoch() const noexcept { return encoded_.size() / batch_size_; }
  std::size_t vocab_size() const noexcept { return vocab_size_; }

 private:
  void start_epoch(std::uint64_t seed);

  std::vector<std::vector<std::int32_t>> encoded_;
  std::size_t vocab_size_;
  std::size_t seq_len_;
  std::size_t batch_size_;
  MaskingPolicy policy_;
  std::size_t skipped_ = 0;
  Position pos_;
  std::vector<std::size_t> order_;
};

}  // namespace bpdec
