// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "bpdec/gradcheck.hpp"
#include "bpdec/model.hpp"
#include "bpdec/model_gradcheck.hpp"
#include "test_support.hpp"

using namespace bpdec;
using bpdec::testing::random_tensor;

namespace {

ModelConfig two_decoder_config() {
  ModelConfig c = testing::tiny_config();
  c.decoder_layers = 2;
  c.gua.entries = {{1, 0.5}, {2, 1.0}};
  return c;
}

std::vector<UnmaskPlan> plans_for(const MaskedBatch& batch, const GuaSchedule& schedule, std::size_t layers,
                                  Rng& rng) {
  std::vector<UnmaskPlan> out;
  for (std::size_t b = 0; b < batch.batch; ++b) out.push_back(plan_unmasking(batch.masked_row(b), schedule, layers, rng));
  return out;
}

std::vector<std::vector<bool>> pads_of(const MaskedBatch& batch) {
  std::vector<std::vector<bool>> out;
  for (std::size_t b = 0; b < batch.batch; ++b) out.push_back(batch.pad_row(b));
  return out;
}

Tensor<double> run_decoder(const ParamStore<double>& params, const Tensor<double>& h_enc, const MaskedBatch& batch,
                           const std::vector<UnmaskPlan>& plans, const ModelConfig& cfg) {
  Graph<double> g(params);
  const auto base = batch.base_key_blocks();
  const auto pads = pads_of(batch);
  return decoder_forward(g, g.constant(h_enc), std::span<const KeyBlockVector>(base),
                         std::span<const std::vector<bool>>(pads), std::span<const UnmaskPlan>(plans), cfg)
      .value();
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("zero decoder layers return the encoder output") {
    ModelConfig cfg = testing::tiny_config();
    cfg.decoder_layers = 0;
    cfg.gua = {};
    const auto batch = random_masked_batch(cfg, 2, 1);
    Rng rng(1, "x");
    const auto h = random_tensor({2 * cfg.max_seq_len, cfg.hidden}, rng);
    ParamStore<double> none;
    const auto plans = plans_for(batch, {}, 0, rng);
    CHECK(run_decoder(none, h, batch, plans, cfg) == h);
  }

  TEST_CASE("empty plans make each decoder layer an extra encoder layer") {
    const ModelConfig cfg = two_decoder_config();
    const auto params = init_params<double>(cfg, 2, 0.3);
    const auto batch = random_masked_batch(cfg, 3, 2);
    Rng rng(2, "x");
    const auto h = random_tensor({3 * cfg.max_seq_len, cfg.hidden}, rng);
    const auto plans = plans_for(batch, {}, 2, rng);
    const auto dec = run_decoder(params, h, batch, plans, cfg);

    Graph<double> g(params);
    const auto base = batch.base_key_blocks();
    auto x = g.constant(h);
    for (std::size_t l = 0; l < 2; ++l) x = transformer_block(g, x, base, "decoder.layer." + std::to_string(l), cfg);
    CHECK(x.value() == dec);
  }

  TEST_CASE("unmasking lets masked positions inform other rows") {
    const ModelConfig cfg = two_decoder_config();
    const auto params = init_params<double>(cfg, 3, 0.3);
    const auto batch = random_masked_batch(cfg, 2, 3);
    Rng rng(3, "x");
    const auto h = random_tensor({2 * cfg.max_seq_len, cfg.hidden}, rng);
    const auto full = plans_for(batch, GuaSchedule{{{1, 1.0}}}, 2, rng);
    const auto empty = plans_for(batch, {}, 2, rng);
    const auto rows = batch.masked_indices();
    REQUIRE_FALSE(rows.empty());
    const std::size_t p = static_cast<std::size_t>(rows.front());
    auto perturbed = h;
    for (std::size_t c = 0; c < cfg.hidden; ++c) perturbed(p, c) += 1.0;

    auto other_rows_change = [&](const std::vector<UnmaskPlan>& plans) {
      const auto a = run_decoder(params, h, batch, plans, cfg);
      const auto b = run_decoder(params, perturbed, batch, plans, cfg);
      double diff = 0.0;
      for (std::size_t r = 0; r < a.rows(); ++r) {
        if (r == p) continue;
        for (std::size_t c = 0; c < cfg.hidden; ++c) diff = std::max(diff, std::abs(a(r, c) - b(r, c)));
      }
      return diff;
    };
    CHECK(other_rows_change(full) > 1e-6);
    CHECK(other_rows_change(empty) <= 1e-12);
  }

  TEST_CASE("padding stays blocked in every decoder layer") {
    const ModelConfig cfg = two_decoder_config();
    const auto params = init_params<double>(cfg, 4, 0.3);
    RngStreams rngs(4);
    const auto batch = random_masked_batch(cfg, 4, 4);
    Graph<double> g(params);
    PretrainOptions opts;
    opts.capture_attention = true;
    const auto out = pretrain_forward_loss(g, batch, cfg, rngs, opts);
    const std::size_t s = cfg.max_seq_len;
    for (std::size_t b = 0; b < batch.batch; ++b) {
      const auto pad = batch.pad_row(b);
      const auto masked = batch.masked_row(b);
      for (const auto& layer : out.encoder_attention.layers) {
        const auto& w = layer[b];
        for (std::size_t i = 0; i < w.size(); ++i)
          if (pad[i % s] || masked[i % s]) CHECK(w[i] == 0.0);
      }
      for (const auto& layer : out.decoder_attention.layers) {
        const auto& w = layer[b];
        for (std::size_t i = 0; i < w.size(); ++i)
          if (pad[i % s]) CHECK(w[i] == 0.0);
      }
    }
    CHECK(out.encoder_attention.layers.size() == cfg.encoder_layers);
    CHECK(out.decoder_attention.layers.size() == cfg.decoder_layers);
  }

  TEST_CASE("mixing degenerate probabilities are exact") {
    Rng rng(5, "x");
    Graph<double> g;
    auto enc = g.constant(random_tensor({12, 4}, rng));
    auto dec = g.constant(random_tensor({12, 4}, rng));
    Rng mix(5, "mix");
    std::vector<bool> draws;
    const Tensor<double> all_dec = mix_outputs(enc, dec, {1.0}, 3, mix, &draws).value();
    CHECK(all_dec == dec.value());
    CHECK(draws == std::vector<bool>(4, true));
    draws.clear();
    const Tensor<double> all_enc = mix_outputs(enc, dec, {0.0}, 3, mix, &draws).value();
    CHECK(all_enc == enc.value());
    CHECK(draws == std::vector<bool>(4, false));
    CHECK_THROWS(mix_outputs(enc, g.constant(Tensor<double>({12, 5})), {0.5}, 3, mix));
    CHECK_THROWS(MixPolicy{1.5}.validate());
  }

  TEST_CASE("mixing selects whole sequences at the configured rate") {
    Rng rng(6, "x");
    const std::size_t s = 2, batch = 10000;
    Tensor<double> e({batch * s, 1}), d({batch * s, 1});
    for (std::size_t i = 0; i < batch * s; ++i) d[i] = 1.0;
    Graph<double> g;
    Rng mix(6, "mix");
    std::vector<bool> draws;
    const auto out = mix_outputs(g.constant(e), g.constant(d), {0.8}, s, mix, &draws).value();
    std::size_t taken = 0;
    for (std::size_t b = 0; b < batch; ++b) {
      CHECK(out[b * s] == out[b * s + 1]);
      CHECK((out[b * s] == 1.0) == draws[b]);
      taken += draws[b];
    }
    CHECK(std::abs(double(taken) / batch - 0.8) < 0.02);
  }

  TEST_CASE("head logits are tied to the token embeddings") {
    ModelConfig cfg = testing::tiny_config();
    auto params = init_params<double>(cfg, 7, 0.3);
    Rng rng(7, "x");
    const auto x = random_tensor({3, cfg.hidden}, rng);
    auto logits_of = [&](const ParamStore<double>& p) {
      Graph<double> g(p);
      return mlm_head(g, g.constant(x), cfg).value();
    };
    const auto before = logits_of(params);
    CHECK(before.shape() == Shape{3, cfg.vocab_size});
    const std::size_t token = 9;
    for (std::size_t c = 0; c < cfg.hidden; ++c) params.at("embeddings.token")(token, c) *= 2.0;
    const auto after = logits_of(params);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t v = 0; v < cfg.vocab_size; ++v) {
        const double expected = v == token ? 2.0 * before(r, v) : before(r, v);
        CHECK(std::abs(after(r, v) - expected) < 1e-12);
      }
  }

  TEST_CASE("head gradient includes both uses of the embedding") {
    ModelConfig cfg = testing::tiny_config();
    cfg.decoder_layers = 0;
    cfg.gua = {};
    cfg.encoder_layers = 0;
    const auto params = init_params<double>(cfg, 8, 0.3);
    const auto batch = random_masked_batch(cfg, 2, 8);
    GraphLossFn<double> f = [&](Graph<double>& g) {
      auto x = embed(g, batch.input_ids, batch.seq_len, cfg);
      auto logits = mlm_head(g, ops::gather_rows(x, batch.masked_indices()), cfg);
      return ops::cross_entropy_masked(logits, batch.masked_labels(), std::vector<bool>(logits.value().rows(), true));
    };
    CHECK(finite_diff_check(f, params).max_rel_error < 1e-4);
  }

  TEST_CASE("loss at initialization is near ln V") {
    ModelConfig cfg = two_decoder_config();
    cfg.vocab_size = 64;
    cfg.max_seq_len = 32;
    const auto params = init_params<double>(cfg, 9, 0.02);
    const auto batch = random_masked_batch(cfg, 16, 9);
    RngStreams rngs(9);
    Graph<double> g(params);
    const double loss = pretrain_forward_loss(g, batch, cfg, rngs).loss.value().item();
    CHECK(std::abs(loss - std::log(64.0)) < 0.3);
  }

  TEST_CASE("frozen streams reproduce the loss bit for bit") {
    const ModelConfig cfg = two_decoder_config();
    const auto params = init_params<float>(cfg, 10, 0.2);
    const auto batch = random_masked_batch(cfg, 4, 10);
    const RngStreams frozen(10);
    auto run = [&] {
      RngStreams rngs = frozen;
      Graph<float> g(params);
      auto out = pretrain_forward_loss(g, batch, cfg, rngs);
      return std::make_pair(out.loss.value().item(), out.mix_draws);
    };
    CHECK(run() == run());
  }

  TEST_CASE("diagnostics report plans, counts and draws") {
    const ModelConfig cfg = two_decoder_config();
    const auto params = init_params<double>(cfg, 11, 0.2);
    const auto batch = random_masked_batch(cfg, 5, 11);
    RngStreams rngs(11);
    Graph<double> g(params);
    const auto out = pretrain_forward_loss(g, batch, cfg, rngs);
    CHECK(out.mix_draws.size() == 5);
    CHECK(out.plans.size() == 5);
    REQUIRE(out.unmask_counts.size() == 2);
    std::size_t m = 0;
    for (std::size_t b = 0; b < 5; ++b) {
      std::size_t mb = 0;
      for (bool v : batch.masked_row(b)) mb += v;
      m += mb;
    }
    CHECK(out.unmask_counts[1] == m);
    CHECK(out.logits.shape() == Shape{batch.masked_count(), cfg.vocab_size});
  }

  TEST_CASE("no decoder means no plan or mix draws") {
    ModelConfig cfg = testing::tiny_config();
    cfg.decoder_layers = 0;
    cfg.gua = {};
    const auto params = init_params<double>(cfg, 12, 0.2);
    const auto batch = random_masked_batch(cfg, 3, 12);
    RngStreams rngs(12);
    const RngStreams before = rngs;
    Graph<double> g(params);
    const auto out = pretrain_forward_loss(g, batch, cfg, rngs);
    CHECK(out.mix_draws.empty());
    CHECK(out.plans.empty());
    CHECK(rngs == before);
  }

  TEST_CASE("zero decoder layers equal the control pretrainer") {
    for (auto placement : {LnPlacement::post, LnPlacement::pre}) {
      ModelConfig cfg = testing::tiny_config();
      cfg.decoder_layers = 0;
      cfg.gua = {};
      cfg.ln_placement = placement;
      const auto params = init_params<float>(cfg, 13, 0.2);
      const auto batch = random_masked_batch(cfg, 4, 13);
      RngStreams ra(13), rb(13);
      Graph<float> ga(params), gb(params);
      auto la = pretrain_forward_loss(ga, batch, cfg, ra).loss;
      auto lb = baseline_forward_loss(gb, batch, cfg, rb);
      CHECK(la.value().item() == lb.value().item());
      CHECK(ga.backward(la) == gb.backward(lb));
    }
  }

  TEST_CASE("GUA can be switched off for evaluation") {
    const ModelConfig cfg = two_decoder_config();
    const auto params = init_params<double>(cfg, 14, 0.2);
    const auto batch = random_masked_batch(cfg, 2, 14);
    RngStreams rngs(14);
    Graph<double> g(params);
    PretrainOptions opts;
    opts.apply_gua = false;
    opts.mix_override = 1.0;
    const auto out = pretrain_forward_loss(g, batch, cfg, rngs, opts);
    for (auto n : out.unmask_counts) CHECK(n == 0);
    CHECK(out.mix_draws == std::vector<bool>{true, true});
  }
}
