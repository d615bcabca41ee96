// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bpdec {

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;
inline constexpr std::int32_t kClsId = 2;
inline constexpr std::int32_t kSepId = 3;
inline constexpr std::int32_t kMaskId = 4;
inline constexpr std::int32_t kFirstCorpusId = 5;

/// Word-level vocabulary. Ids 0..4 are [PAD] [UNK] [CLS] [SEP] [MASK];
/// corpus tokens follow from id 5 on.
class Vocab {
 public:
  Vocab() = default;
  /// Tokens for ids 5, 6, ...; must be unique, non-empty, whitespace-free
  /// and distinct from the reserved strings.
  explicit Vocab(std::vector<std::string> corpus_tokens);

  static const std::array<std::string, 5>& reserved_tokens();
  static bool is_reserved(std::int32_t id) noexcept { return id >= 0 && id < kFirstCorpusId; }

  std::size_t size() const noexcept { return kFirstCorpusId + tokens_.size(); }
  /// Id of `token`, or [UNK]. Reserved strings in text also map to [UNK].
  std::int32_t id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::int32_t id) const;
  const std::vector<std::string>& corpus_tokens() const noexcept { return tokens_; }

  /// One corpus token per line; line number (0-based) = id - 5.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Whitespace-separated tokens.
std::vector<std::string> tokenize(std::string_view line);

/// Most frequent tokens first, ties in lexicographic order, until the
/// vocabulary (reserved ids included) holds `max_size` entries.
Vocab build_vocab(std::span<const std::string> lines, std::size_t max_size);

/// [CLS] tokens... [SEP], truncated to fit `seq_len` (the final [SEP] is
/// kept), right-padded with [PAD]. Unknown words become [UNK].
std::vector<std::int32_t> encode_line(std::string_view line, const Vocab& vocab, std::size_t seq_len);

/// Lines of a UTF-8 text file without their line terminators.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace bpdec
