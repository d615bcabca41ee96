// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <map>
#include <set>

#include "bpdec/synth.hpp"
#include "bpdec/vocab.hpp"

using namespace bpdec;

TEST_SUITE("synth") {
  TEST_CASE("symbol names") {
    CHECK(symbol_name(0) == "w00");
    CHECK(symbol_name(7) == "w07");
    CHECK(symbol_name(63) == "w63");
  }

  TEST_CASE("markov corpus shape and determinism") {
    MarkovCorpusSpec spec;
    spec.lines = 2000;
    const auto a = generate_markov_corpus(spec);
    CHECK(a == generate_markov_corpus(spec));
    CHECK(a.size() == 2000);
    std::set<std::string> symbols;
    for (const auto& line : a) {
      const auto toks = tokenize(line);
      CHECK(toks.size() >= spec.min_len);
      CHECK(toks.size() <= spec.max_len);
      symbols.insert(toks.begin(), toks.end());
    }
    CHECK(symbols.size() == 64);
    spec.seed += 1;
    CHECK(a != generate_markov_corpus(spec));
  }

  TEST_CASE("successors stay inside a four-symbol set") {
    MarkovCorpusSpec spec;
    spec.lines = 3000;
    std::map<std::string, std::set<std::string>> successors;
    for (const auto& line : generate_markov_corpus(spec)) {
      const auto toks = tokenize(line);
      for (std::size_t i = 2; i < toks.size(); ++i) successors[toks[i - 1]].insert(toks[i]);
    }
    for (const auto& [sym, next] : successors) CHECK(next.size() <= 4);
  }

  TEST_CASE("held-out lines continue the same language") {
    MarkovCorpusSpec spec;
    spec.lines = 3000;
    const auto split = generate_markov_split(spec, 500);
    CHECK(split.train == generate_markov_corpus(spec));
    CHECK(split.heldout.size() == 500);
    std::map<std::string, std::set<std::string>> successors;
    for (const auto& line : split.train) {
      const auto toks = tokenize(line);
      for (std::size_t i = 2; i < toks.size(); ++i) successors[toks[i - 1]].insert(toks[i]);
    }
    std::size_t seen = 0, known = 0;
    for (const auto& line : split.heldout) {
      const auto toks = tokenize(line);
      for (std::size_t i = 2; i < toks.size(); ++i, ++seen) known += successors[toks[i - 1]].count(toks[i]);
    }
    CHECK(double(known) / double(seen) > 0.99);
  }

  TEST_CASE("order task labels follow the rule") {
    CHECK(order_task_label({"w01", "w62", "w03"}) == 1);
    CHECK(order_task_label({"w63", "w01"}) == 0);
    CHECK(order_task_label({"w01", "w02"}) == 0);
    CHECK(order_task_label({"w62", "w63"}) == 1);
    CHECK(order_task_label({"w63", "w62"}) == 0);

    const auto rows = generate_order_task({});
    CHECK(rows.size() == 2000);
    std::size_t ones = 0;
    for (const auto& r : rows) {
      CHECK(r.label == order_task_label(tokenize(r.text)));
      ones += r.label;
    }
    CHECK(ones > 600);
    CHECK(ones < 1400);
    const auto tsv = to_tsv({{1, "w62 w00"}});
    CHECK(tsv == std::vector<std::string>{"1\tw62 w00"});
  }
}
