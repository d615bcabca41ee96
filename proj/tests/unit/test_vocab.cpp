// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>

#include "bpdec/vocab.hpp"
#include "test_support.hpp"

using namespace bpdec;

TEST_SUITE("vocab") {
  TEST_CASE("frequency order") {
    const std::vector<std::string> lines = {"a a b"};
    const Vocab v = build_vocab(lines, 100);
    CHECK(v.id("a") == kFirstCorpusId);
    CHECK(v.id("b") == kFirstCorpusId + 1);
  }

  TEST_CASE("size cap counts reserved ids") {
    const std::vector<std::string> lines = {"a a b c"};
    const Vocab v = build_vocab(lines, 6);
    CHECK(v.size() == 6);
    CHECK(v.corpus_tokens() == std::vector<std::string>{"a"});
    CHECK(v.id("b") == kUnkId);
    CHECK_THROWS(build_vocab(lines, 4));
  }

  TEST_CASE("ties break lexicographically") {
    const std::vector<std::string> lines = {"y x"};
    const Vocab v = build_vocab(lines, 100);
    CHECK(v.corpus_tokens() == std::vector<std::string>{"x", "y"});
  }

  TEST_CASE("empty corpus is rejected") {
    CHECK_THROWS(build_vocab(std::vector<std::string>{}, 10));
    CHECK_THROWS(build_vocab(std::vector<std::string>{"", "   "}, 10));
  }

  TEST_CASE("reserved ids are fixed and never produced by text") {
    const Vocab v({"hello"});
    CHECK(v.token(kPadId) == "[PAD]");
    CHECK(v.token(kUnkId) == "[UNK]");
    CHECK(v.token(kClsId) == "[CLS]");
    CHECK(v.token(kSepId) == "[SEP]");
    CHECK(v.token(kMaskId) == "[MASK]");
    CHECK(v.id("[MASK]") == kUnkId);
    CHECK(v.id("[CLS]") == kUnkId);
    CHECK_THROWS(Vocab({"[SEP]"}));
    CHECK_THROWS(Vocab({"dup", "dup"}));
    CHECK_THROWS(Vocab({"has space"}));
  }

  TEST_CASE("token and id are inverse") {
    std::vector<std::string> lines;
    Rng rng(1, "vocab");
    for (int i = 0; i < 50; ++i) {
      std::string line;
      for (int j = 0; j < 10; ++j) line += "t" + std::to_string(rng.below(40)) + " ";
      lines.push_back(line);
    }
    const Vocab v = build_vocab(lines, 30);
    for (std::int32_t id = kFirstCorpusId; id < static_cast<std::int32_t>(v.size()); ++id) CHECK(v.id(v.token(id)) == id);
  }

  TEST_CASE("encode_line examples") {
    const Vocab v({"a", "b"});
    CHECK(encode_line("", v, 5) == std::vector<std::int32_t>{kClsId, kSepId, kPadId, kPadId, kPadId});
    CHECK(encode_line("a b a b a", v, 5) == std::vector<std::int32_t>{kClsId, 5, 6, 5, kSepId});
    CHECK(encode_line("a zzz", v, 5) == std::vector<std::int32_t>{kClsId, 5, kUnkId, kSepId, kPadId});
    CHECK_THROWS(encode_line("a", v, 2));
  }

  TEST_CASE("tokenize splits on any whitespace") {
    CHECK(tokenize("  a\tb  c \r") == std::vector<std::string>{"a", "b", "c"});
    CHECK(tokenize("").empty());
  }

  TEST_CASE("vocab file round-trip") {
    testing::TempDir dir("vocab");
    const Vocab v({"one", "two", "three"});
    v.save(dir / "vocab.txt");
    CHECK(Vocab::load(dir / "vocab.txt") == v);
    const auto lines = read_lines(dir / "vocab.txt");
    CHECK(lines == std::vector<std::string>{"one", "two", "three"});
  }
}
