// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bpdec {

/// "w00", "w01", ... zero-padded to two digits.
std::string symbol_name(std::size_t index);

/// Order-2 Markov language. Each symbol b owns a successor set of 4
/// symbols; given the pair (a, b) one member of that set is preferred with
/// probability `preferred_prob`, otherwise the successor is uniform over
/// the set. The first two symbols of a line are uniform.
struct MarkovCorpusSpec {
  std::size_t symbols = 64;
  std::size_t lines = 50000;
  std::size_t min_len = 8;
  std::size_t max_len = 30;
  double preferred_prob = 0.85;
  std::uint64_t seed = 20240611;
};

std::vector<std::string> generate_markov_corpus(const MarkovCorpusSpec& spec);

/// `spec.lines` training lines followed by `heldout` further lines of the
/// same language; `train` equals generate_markov_corpus(spec).
struct MarkovSplit {
  std::vector<std::string> train;
  std::vector<std::string> heldout;
};

MarkovSplit generate_markov_split(const MarkovCorpusSpec& spec, std::size_t heldout);

/// Two-class ordering task over filler symbols w00..w61 plus the marker
/// symbols `alpha` (w62) and `beta` (w63). Label 1 iff alpha occurs and
/// either beta is absent or the first alpha precedes the first beta.
/// Case mix: alpha only, beta only, neither, both (random order).
struct OrderTaskSpec {
  std::size_t examples = 2000;
  std::size_t min_len = 6;
  std::size_t max_len = 14;
  double p_alpha_only = 0.35;
  double p_beta_only = 0.35;
  double p_neither = 0.2;  // remainder: both
  std::uint64_t seed = 7;
};

struct LabeledLine {
  int label = 0;
  std::string text;
};

std::vector<LabeledLine> generate_order_task(const OrderTaskSpec& spec);

/// Label of a token sequence under the ordering rule.
int order_task_label(const std::vector<std::string>& tokens);

/// "label<TAB>text" lines.
std::vector<std::string> to_tsv(const std::vector<LabeledLine>& rows);

}  // namespace bpdec
