// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bpdec/heatmap.hpp"
#include "bpdec/model.hpp"
#include "bpdec/synth.hpp"
#include "bpdec/trainer.hpp"
#include "test_support.hpp"

using namespace bpdec;

namespace {

Checkpoint<double> random_checkpoint() {
  Checkpoint<double> c;
  c.config = testing::small_run_config();
  c.config.model.vocab_size = kFirstCorpusId + 64;
  c.params = init_params<double>(c.config.model, 3, 0.2);
  for (std::size_t i = 0; i < 64; ++i) c.vocab.push_back(symbol_name(i));
  return c;
}

const char* kLine = "w01 w02 w03 w04 w05 w06 w07 w08 w09 w10 w11 w12";

bool column_is_zero(const HeatmapDump& d, std::size_t col) {
  for (std::size_t i = 0; i < d.annotations.size(); ++i)
    if (d.weights(i, col) != 0.0) return false;
  return true;
}

std::size_t count_kind(const HeatmapDump& d, PositionKind kind) {
  std::size_t n = 0;
  for (auto k : d.annotations) n += k == kind;
  return n;
}

}  // namespace

TEST_SUITE("heatmap") {
  TEST_CASE("encoder never attends to masked or padded keys") {
    const auto ckpt = random_checkpoint();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      HeatmapRequest req;
      req.line = kLine;
      req.seed = seed;
      const auto d = attn_heatmap(ckpt, req);
      CHECK(d.layer == ckpt.config.model.encoder_layers);
      CHECK(count_kind(d, PositionKind::masked) > 0);
      CHECK(count_kind(d, PositionKind::pad) == 16 - 14);
      CHECK(count_kind(d, PositionKind::unmasked) == 0);
      for (std::size_t j = 0; j < d.annotations.size(); ++j)
        if (d.annotations[j] != PositionKind::normal) CHECK(column_is_zero(d, j));
    }
  }

  TEST_CASE("decoder at the final scheduled layer sees every masked key") {
    const auto ckpt = random_checkpoint();
    HeatmapRequest req;
    req.line = kLine;
    req.seed = 1;
    req.stack = HeatmapStack::decoder;
    const auto d = attn_heatmap(ckpt, req);
    CHECK(d.layer == 2);
    CHECK(count_kind(d, PositionKind::masked) == 0);
    CHECK(count_kind(d, PositionKind::unmasked) > 0);
    for (std::size_t j = 0; j < d.annotations.size(); ++j) {
      if (d.annotations[j] == PositionKind::unmasked) CHECK_FALSE(column_is_zero(d, j));
      if (d.annotations[j] == PositionKind::pad) CHECK(column_is_zero(d, j));
    }
  }

  TEST_CASE("without the schedule the decoder keeps masked keys blocked") {
    const auto ckpt = random_checkpoint();
    HeatmapRequest req;
    req.line = kLine;
    req.seed = 1;
    req.stack = HeatmapStack::decoder;
    req.apply_gua = false;
    const auto d = attn_heatmap(ckpt, req);
    CHECK(count_kind(d, PositionKind::unmasked) == 0);
    for (std::size_t j = 0; j < d.annotations.size(); ++j)
      if (d.annotations[j] == PositionKind::masked) CHECK(column_is_zero(d, j));
  }

  TEST_CASE("rows are distributions for averaged and single heads") {
    const auto ckpt = random_checkpoint();
    for (auto stack : {HeatmapStack::encoder, HeatmapStack::decoder}) {
      for (std::optional<std::size_t> head : {std::optional<std::size_t>{}, std::optional<std::size_t>{1}}) {
        HeatmapRequest req;
        req.line = kLine;
        req.seed = 5;
        req.stack = stack;
        req.head = head;
        req.layer = 1;
        const auto d = attn_heatmap(ckpt, req);
        for (std::size_t i = 0; i < d.annotations.size(); ++i) {
          double sum = 0.0;
          for (std::size_t j = 0; j < d.annotations.size(); ++j) {
            CHECK(d.weights(i, j) >= 0.0);
            sum += d.weights(i, j);
          }
          CHECK(std::abs(sum - 1.0) < 1e-5);
        }
      }
    }
  }

  TEST_CASE("same seed gives the same dump") {
    const auto ckpt = random_checkpoint();
    HeatmapRequest req;
    req.line = kLine;
    req.seed = 9;
    req.stack = HeatmapStack::decoder;
    CHECK(attn_heatmap(ckpt, req).to_csv() == attn_heatmap(ckpt, req).to_csv());
  }

  TEST_CASE("invalid requests are rejected") {
    const auto ckpt = random_checkpoint();
    const auto encoder_only = export_encoder(ckpt);
    HeatmapRequest req;
    req.line = kLine;
    req.stack = HeatmapStack::decoder;
    CHECK_THROWS_AS(attn_heatmap(encoder_only, req), std::invalid_argument);
    req.stack = HeatmapStack::encoder;
    CHECK_NOTHROW(attn_heatmap(encoder_only, req));
    req.layer = 3;
    CHECK_THROWS_AS(attn_heatmap(ckpt, req), std::invalid_argument);
    req.layer = 0;
    req.head = 2;
    CHECK_THROWS_AS(attn_heatmap(ckpt, req), std::invalid_argument);
  }

  TEST_CASE("csv layout") {
    HeatmapDump d;
    d.tokens = {"[CLS]", "w01", "[MASK]"};
    d.annotations = {PositionKind::normal, PositionKind::normal, PositionKind::masked};
    d.weights = Tensor<double>({3, 3}, {0.5, 0.5, 0, 0.25, 0.75, 0, 1, 0, 0});
    CHECK(d.to_csv() ==
          "pos,0,1,2\n"
          "token,[CLS],w01,[MASK]\n"
          "kind,normal,normal,masked\n"
          "0,0.5,0.5,0\n"
          "1,0.25,0.75,0\n"
          "2,1,0,0\n");
  }
}
