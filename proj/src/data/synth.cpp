// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/synth.hpp"

#include <array>
#include <cstdio>
#include <stdexcept>

#include "bpdec/rng.hpp"
#include "bpdec/vocab.hpp"

namespace bpdec {

std::string symbol_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "w%02zu", index);
  return buf;
}

std::vector<std::string> generate_markov_corpus(const MarkovCorpusSpec& spec) {
  if (spec.symbols < 4 || spec.min_len < 2 || spec.max_len < spec.min_len) {
    throw std::invalid_argument("generate_markov_corpus: invalid spec");
  }
  const std::size_t n = spec.symbols;
  Rng rng(spec.seed, "markov-table");
  // successors[b]: 4 distinct symbols; preferred[a * n + b]: index into them.
  std::vector<std::array<std::size_t, 4>> successors(n);
  for (auto& set : successors) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    rng.shuffle(pool.begin(), pool.end());
    for (std::size_t i = 0; i < 4; ++i) set[i] = pool[i];
  }
  std::vector<std::size_t> preferred(n * n);
  for (auto& p : preferred) p = rng.below(4);

  Rng draw(spec.seed, "markov-lines");
  std::vector<std::string> lines;
  lines.reserve(spec.lines);
  for (std::size_t l = 0; l < spec.lines; ++l) {
    const std::size_t len = spec.min_len + draw.below(spec.max_len - spec.min_len + 1);
    std::size_t a = draw.below(n), b = draw.below(n);
    std::string line = symbol_name(a) + " " + symbol_name(b);
    for (std::size_t i = 2; i < len; ++i) {
      const auto& set = successors[b];
      const std::size_t pick = draw.bernoulli(spec.preferred_prob) ? preferred[a * n + b] : draw.below(4);
      const std::size_t c = set[pick];
      line += " " + symbol_name(c);
      a = b;
      b = c;
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

MarkovSplit generate_markov_split(const MarkovCorpusSpec& spec, std::size_t heldout) {
  MarkovCorpusSpec all = spec;
  all.lines = spec.lines + heldout;
  auto lines = generate_markov_corpus(all);
  MarkovSplit out;
  out.heldout.assign(lines.begin() + static_cast<std::ptrdiff_t>(spec.lines), lines.end());
  lines.resize(spec.lines);
  out.train = std::move(lines);
  return out;
}

int order_task_label(const std::vector<std::string>& tokens) {
  const std::string alpha = symbol_name(62), beta = symbol_name(63);
  for (const auto& t : tokens) {
    if (t == alpha) return 1;
    if (t == beta) return 0;
  }
  return 0;
}

std::vector<LabeledLine> generate_order_task(const OrderTaskSpec& spec) {
  if (spec.min_len < 2 || spec.max_len < spec.min_len) throw std::invalid_argument("generate_order_task: invalid spec");
  Rng rng(spec.seed, "order-task");
  std::vector<LabeledLine> rows;
  rows.reserve(spec.examples);
  for (std::size_t e = 0; e < spec.examples; ++e) {
    const std::size_t len = spec.min_len + rng.below(spec.max_len - spec.min_len + 1);
    std::vector<std::string> tokens(len);
    for (auto& t : tokens) t = symbol_name(rng.below(62));
    const double u = rng.uniform();
    const std::size_t i = rng.below(len);
    std::size_t j = rng.below(len - 1);
    if (j >= i) ++j;
    if (u < spec.p_alpha_only) {
      tokens[i] = symbol_name(62);
    } else if (u < spec.p_alpha_only + spec.p_beta_only) {
      tokens[i] = symbol_name(63);
    } else if (u >= spec.p_alpha_only + spec.p_beta_only + spec.p_neither) {
      tokens[i] = symbol_name(62);
      tokens[j] = symbol_name(63);
    }
    std::string text;
    for (std::size_t k = 0; k < tokens.size(); ++k) text += (k ? " " : "") + tokens[k];
    rows.push_back({order_task_label(tokens), std::move(text)});
  }
  return rows;
}

std::vector<std::string> to_tsv(const std::vector<LabeledLine>& rows) {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(std::to_string(r.label) + "\t" + r.text);
  return out;
}

}  // namespace bpdec
