// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

namespace bpdec {

const std::array<std::string, 5>& Vocab::reserved_tokens() {
  static const std::array<std::string, 5> kReserved = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
  return kReserved;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

bool is_reserved_text(std::string_view token) {
  const auto& reserved = Vocab::reserved_tokens();
  return std::find(reserved.begin(), reserved.end(), token) != reserved.end();
}

}  // namespace

Vocab::Vocab(std::vector<std::string> corpus_tokens) : tokens_(std::move(corpus_tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const auto& t = tokens_[i];
    if (t.empty() || std::any_of(t.begin(), t.end(), is_space)) {
      throw std::invalid_argument("vocab token " + std::to_string(i) + " is empty or contains whitespace");
    }
    if (is_reserved_text(t)) throw std::invalid_argument("vocab token '" + t + "' collides with a reserved token");
    if (!index_.emplace(t, static_cast<std::int32_t>(kFirstCorpusId + i)).second) {
      throw std::invalid_argument("duplicate vocab token '" + t + "'");
    }
  }
}

std::int32_t Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

const std::string& Vocab::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= size()) throw std::out_of_range("token id " + std::to_string(id));
  if (id < kFirstCorpusId) return reserved_tokens()[static_cast<std::size_t>(id)];
  return tokens_[static_cast<std::size_t>(id - kFirstCorpusId)];
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocab file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw std::runtime_error("failed writing vocab file " + path.string());
}

Vocab Vocab::load(const std::filesystem::path& path) { return Vocab(read_lines(path)); }

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocab build_vocab(std::span<const std::string> lines, std::size_t max_size) {
  if (max_size < static_cast<std::size_t>(kFirstCorpusId)) {
    throw std::invalid_argument("vocab size cap " + std::to_string(max_size) + " below the 5 reserved tokens");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& line : lines) {
    for (auto& tok : tokenize(line)) {
      if (!is_reserved_text(tok)) ++counts[std::move(tok)];
    }
  }
  if (counts.empty()) throw std::invalid_argument("cannot build a vocabulary from an empty corpus");
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), max_size - kFirstCorpusId);
  std::vector<std::string> tokens;
  tokens.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(std::move(ranked[i].first));
  return Vocab(std::move(tokens));
}

std::vector<std::int32_t> encode_line(std::string_view line, const Vocab& vocab, std::size_t seq_len) {
  if (seq_len < 3) throw std::invalid_argument("encode_line: seq_len must be at least 3");
  std::vector<std::int32_t> ids;
  ids.reserve(seq_len);
  ids.push_back(kClsId);
  for (const auto& tok : tokenize(line)) {
    if (ids.size() + 1 >= seq_len) break;
    ids.push_back(vocab.id(tok));
  }
  ids.push_back(kSepId);
  ids.resize(seq_len, kPadId);
  return ids;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace bpdec
