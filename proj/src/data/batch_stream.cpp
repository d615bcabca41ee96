// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/batch_stream.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace bpdec {

BatchStream::BatchStream(std::span<const std::string> lines, const Vocab& vocab, std::size_t seq_len,
                         std::size_t batch_size, MaskingPolicy policy)
    : vocab_size_(vocab.size()), seq_len_(seq_len), batch_size_(batch_size), policy_(policy) {
  policy_.validate();
  if (batch_size_ == 0) throw std::invalid_argument("BatchStream: batch size must be positive");
  for (const auto& line : lines) {
    auto ids = encode_line(line, vocab, seq_len_);
    if (std::any_of(ids.begin(), ids.end(), [](std::int32_t id) { return !is_unmaskable(id); })) {
      encoded_.push_back(std::move(ids));
    } else {
      ++skipped_;
    }
  }
  if (encoded_.size() < batch_size_) {
    throw std::invalid_argument("BatchStream: corpus has " + std::to_string(encoded_.size()) +
                                " usable lines, fewer than one batch of " + std::to_string(batch_size_));
  }
}

void BatchStream::start_epoch(std::uint64_t seed) {
  order_.resize(encoded_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  Rng shuffle_rng(seed, "epoch-order");
  shuffle_rng.shuffle(order_.begin(), order_.end());
}

void BatchStream::seek(const Position& pos) {
  pos_ = pos;
  if (pos_.started) start_epoch(pos_.epoch_seed);
}

MaskedBatch BatchStream::next(RngStreams& rngs) {
  if (!pos_.started || pos_.cursor + batch_size_ > encoded_.size()) {
    if (pos_.started) ++pos_.epoch;
    pos_.started = true;
    pos_.cursor = 0;
    pos_.epoch_seed = rngs["data"].next_u64();
    start_epoch(pos_.epoch_seed);
  }
  MaskedBatch batch;
  Rng& masking = rngs["masking"];
  for (std::size_t i = 0; i < batch_size_; ++i) {
    const auto& ids = encoded_[order_[pos_.cursor + i]];
    batch.append(*apply_mlm_masking(ids, vocab_size_, policy_, masking));
  }
  pos_.cursor += batch_size_;
  return batch;
}

}  // namespace bpdec
