// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bpdec/config.hpp"
#include "bpdec/rng.hpp"
#include "bpdec/transformer.hpp"
#include "bpdec/vocab.hpp"

namespace bpdec {

/// Selection of masked-LM targets and their corruption. Of the selected
/// positions, `mask_frac` become [MASK], `keep_frac` keep their token and
/// `random_frac` get a uniformly drawn non-reserved id; the category is
/// drawn independently per position.
struct MaskingPolicy {
  double select_rate = 0.15;
  double mask_frac = 0.8;
  double keep_frac = 0.1;
  double random_frac = 0.1;

  static MaskingPolicy from(const TrainConfig& train) {
    return {train.select_rate, train.mask_frac, train.keep_frac, train.random_frac};
  }
  void validate() const;
};

enum class MaskCategory : std::uint8_t { none = 0, mask = 1, keep = 2, random = 3 };

inline constexpr std::int32_t kIgnoreLabel = -1;

/// Number of targets for a sequence with `n_maskable` candidates:
/// max(1, round(select_rate · n_maskable)), round half away from zero.
std::size_t selection_count(std::size_t n_maskable, double select_rate);

/// True for [CLS], [SEP] and [PAD], which are never selected.
inline bool is_unmaskable(std::int32_t id) { return id == kClsId || id == kSepId || id == kPadId; }

/// One corrupted sequence.
struct MaskedSequence {
  std::vector<std::int32_t> input_ids;
  std::vector<std::int32_t> labels;  // original id where masked, kIgnoreLabel elsewhere
  std::vector<bool> masked;
  std::vector<bool> pad;
  std::vector<MaskCategory> categories;
};

/// Corrupts one encoded sequence. Returns nullopt, and draws nothing from
/// `rng`, when the sequence has no maskable token.
std::optional<MaskedSequence> apply_mlm_masking(std::span<const std::int32_t> ids, std::size_t vocab_size,
                                                const MaskingPolicy& policy, Rng& rng);

/// blocked = masked ∪ pad. Throws when every position would be blocked.
KeyBlockVector make_base_key_block(const std::vector<bool>& masked, const std::vector<bool>& pad);

/// A batch of corrupted sequences stored row-major as [batch × seq_len].
struct MaskedBatch {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::vector<std::int32_t> input_ids;
  std::vector<std::int32_t> labels;
  std::vector<bool> masked_positions;
  std::vector<bool> pad_positions;
  std::vector<MaskCategory> categories;

  void append(const MaskedSequence& seq);
  std::vector<bool> masked_row(std::size_t b) const;
  std::vector<bool> pad_row(std::size_t b) const;
  std::vector<KeyBlockVector> base_key_blocks() const;
  /// Flat indices (b · seq_len + i) of masked positions, ascending.
  std::vector<std::int32_t> masked_indices() const;
  /// Labels at `masked_indices()`, same order.
  std::vector<std::int32_t> masked_labels() const;
  std::size_t masked_count() const;

  bool operator==(const MaskedBatch&) const = default;
};

struct MaskStats {
  std::size_t sequences = 0;
  std::size_t maskable = 0;
  std::size_t selected = 0;
  std::size_t masked = 0;
  std::size_t kept = 0;
  std::size_t randomized = 0;

  double select_rate() const { return maskable ? double(selected) / double(maskable) : 0.0; }
  double mask_rate() const { return selected ? double(masked) / double(selected) : 0.0; }
  double keep_rate() const { return selected ? double(kept) / double(selected) : 0.0; }
  double random_rate() const { return selected ? double(randomized) / double(selected) : 0.0; }
};

/// Masks corpus lines (cycling through them) until at least `n_tokens`
/// maskable tokens have been seen. Rejects n_tokens < 10^4.
MaskStats mask_stats(std::span<const std::string> lines, const Vocab& vocab, std::size_t seq_len,
                     const MaskingPolicy& policy, std::uint64_t seed, std::size_t n_tokens);

/// Newline-delimited key=value report with binomial standard errors.
std::string mask_stats_report(const MaskStats& stats, const MaskingPolicy& policy);

}  // namespace bpdec
