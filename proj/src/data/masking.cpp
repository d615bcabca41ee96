// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/masking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bpdec {

void MaskingPolicy::validate() const {
  if (!(select_rate > 0.0 && select_rate <= 1.0)) throw std::invalid_argument("select_rate must lie in (0, 1]");
  if (mask_frac < 0.0 || keep_frac < 0.0 || random_frac < 0.0) {
    throw std::invalid_argument("replacement fractions must be non-negative");
  }
  if (std::abs(mask_frac + keep_frac + random_frac - 1.0) > 1e-9) {
    throw std::invalid_argument("replacement fractions must sum to 1");
  }
}

std::size_t selection_count(std::size_t n_maskable, double select_rate) {
  const auto n = static_cast<std::size_t>(std::lround(select_rate * static_cast<double>(n_maskable)));
  return std::min(n_maskable, std::max<std::size_t>(1, n));
}

std::optional<MaskedSequence> apply_mlm_masking(std::span<const std::int32_t> ids, std::size_t vocab_size,
                                                const MaskingPolicy& policy, Rng& rng) {
  policy.validate();
  if (vocab_size <= static_cast<std::size_t>(kFirstCorpusId)) {
    throw std::invalid_argument("apply_mlm_masking: vocabulary has no corpus tokens");
  }
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!is_unmaskable(ids[i])) candidates.push_back(i);
  }
  if (candidates.empty()) return std::nullopt;

  const std::size_t n = ids.size();
  MaskedSequence out;
  out.input_ids.assign(ids.begin(), ids.end());
  out.labels.assign(n, kIgnoreLabel);
  out.masked.assign(n, false);
  out.pad.assign(n, false);
  out.categories.assign(n, MaskCategory::none);
  for (std::size_t i = 0; i < n; ++i) out.pad[i] = ids[i] == kPadId;

  // Partial Fisher-Yates: the first k entries become a uniform k-subset.
  const std::size_t k = selection_count(candidates.size(), policy.select_rate);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }
  const auto n_random_ids = static_cast<std::uint64_t>(vocab_size - kFirstCorpusId);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t pos = candidates[i];
    out.masked[pos] = true;
    out.labels[pos] = ids[pos];
    const double u = rng.uniform();
    if (u < policy.mask_frac) {
      out.categories[pos] = MaskCategory::mask;
      out.input_ids[pos] = kMaskId;
    } else if (u < policy.mask_frac + policy.keep_frac) {
      out.categories[pos] = MaskCategory::keep;
    } else {
      out.categories[pos] = MaskCategory::random;
      out.input_ids[pos] = kFirstCorpusId + static_cast<std::int32_t>(rng.below(n_random_ids));
    }
  }
  return out;
}

KeyBlockVector make_base_key_block(const std::vector<bool>& masked, const std::vector<bool>& pad) {
  if (masked.size() != pad.size()) throw std::invalid_argument("make_base_key_block: length mismatch");
  std::vector<bool> blocked(masked.size());
  for (std::size_t i = 0; i < masked.size(); ++i) blocked[i] = masked[i] || pad[i];
  KeyBlockVector kb(std::move(blocked));
  if (!kb.any_unblocked()) throw std::invalid_argument("make_base_key_block: every position would be blocked");
  return kb;
}

void MaskedBatch::append(const MaskedSequence& seq) {
  if (batch == 0) seq_len = seq.input_ids.size();
  if (seq.input_ids.size() != seq_len) throw std::invalid_argument("MaskedBatch: ragged sequence");
  input_ids.insert(input_ids.end(), seq.input_ids.begin(), seq.input_ids.end());
  labels.insert(labels.end(), seq.labels.begin(), seq.labels.end());
  masked_positions.insert(masked_positions.end(), seq.masked.begin(), seq.masked.end());
  pad_positions.insert(pad_positions.end(), seq.pad.begin(), seq.pad.end());
  categories.insert(categories.end(), seq.categories.begin(), seq.categories.end());
  ++batch;
}

std::vector<bool> MaskedBatch::masked_row(std::size_t b) const {
  const auto first = masked_positions.begin() + static_cast<std::ptrdiff_t>(b * seq_len);
  return {first, first + static_cast<std::ptrdiff_t>(seq_len)};
}

std::vector<bool> MaskedBatch::pad_row(std::size_t b) const {
  const auto first = pad_positions.begin() + static_cast<std::ptrdiff_t>(b * seq_len);
  return {first, first + static_cast<std::ptrdiff_t>(seq_len)};
}

std::vector<KeyBlockVector> MaskedBatch::base_key_blocks() const {
  std::vector<KeyBlockVector> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) out.push_back(make_base_key_block(masked_row(b), pad_row(b)));
  return out;
}

std::vector<std::int32_t> MaskedBatch::masked_indices() const {
  std::vector<std::int32_t> out;
  for (std::size_t i = 0; i < masked_positions.size(); ++i)
    if (masked_positions[i]) out.push_back(static_cast<std::int32_t>(i));
  return out;
}

std::vector<std::int32_t> MaskedBatch::masked_labels() const {
  std::vector<std::int32_t> out;
  for (std::size_t i = 0; i < masked_positions.size(); ++i)
    if (masked_positions[i]) out.push_back(labels[i]);
  return out;
}

std::size_t MaskedBatch::masked_count() const {
  return static_cast<std::size_t>(std::count(masked_positions.begin(), masked_positions.end(), true));
}

MaskStats mask_stats(std::span<const std::string> lines, const Vocab& vocab, std::size_t seq_len,
                     const MaskingPolicy& policy, std::uint64_t seed, std::size_t n_tokens) {
  if (n_tokens < 10000) throw std::invalid_argument("mask_stats: need at least 10^4 maskable tokens");
  std::vector<std::vector<std::int32_t>> encoded;
  for (const auto& line : lines) {
    auto ids = encode_line(line, vocab, seq_len);
    if (std::any_of(ids.begin(), ids.end(), [](std::int32_t id) { return !is_unmaskable(id); })) {
      encoded.push_back(std::move(ids));
    }
  }
  if (encoded.empty()) throw std::invalid_argument("mask_stats: corpus has no maskable tokens");
  Rng rng(seed, "masking");
  MaskStats stats;
  for (std::size_t i = 0; stats.maskable < n_tokens; ++i) {
    const auto& ids = encoded[i % encoded.size()];
    auto seq = apply_mlm_masking(ids, vocab.size(), policy, rng);
    ++stats.sequences;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (!is_unmaskable(ids[p])) ++stats.maskable;
      switch (seq->categories[p]) {
        case MaskCategory::mask: ++stats.masked; break;
        case MaskCategory::keep: ++stats.kept; break;
        case MaskCategory::random: ++stats.randomized; break;
        case MaskCategory::none: break;
      }
    }
  }
  stats.selected = stats.masked + stats.kept + stats.randomized;
  return stats;
}

std::string mask_stats_report(const MaskStats& stats, const MaskingPolicy& policy) {
  auto se = [](double p, std::size_t n) { return n ? std::sqrt(p * (1.0 - p) / double(n)) : 0.0; };
  std::ostringstream os;
  char buf[128];
  auto line = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s=%.6f\n", key, v);
    os << buf;
  };
  os << "sequences=" << stats.sequences << '\n'
     << "maskable_tokens=" << stats.maskable << '\n'
     << "selected=" << stats.selected << '\n'
     << "replaced_mask=" << stats.masked << '\n'
     << "replaced_keep=" << stats.kept << '\n'
     << "replaced_random=" << stats.randomized << '\n';
  line("select_rate", stats.select_rate());
  line("select_rate_target", policy.select_rate);
  line("select_rate_stderr", se(policy.select_rate, stats.maskable));
  line("mask_rate", stats.mask_rate());
  line("mask_rate_target", policy.mask_frac);
  line("mask_rate_stderr", se(policy.mask_frac, stats.selected));
  line("keep_rate", stats.keep_rate());
  line("keep_rate_target", policy.keep_frac);
  line("keep_rate_stderr", se(policy.keep_frac, stats.selected));
  line("random_rate", stats.random_rate());
  line("random_rate_target", policy.random_frac);
  line("random_rate_stderr", se(policy.random_frac, stats.selected));
  os << "note=select_rate deviates from the target by per-sequence rounding of round(rate*n) with a minimum of 1;"
        " stderr values are binomial sqrt(p(1-p)/n) at the target rate\n";
  return os.str();
}

}  // namespace bpdec
