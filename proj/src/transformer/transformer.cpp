// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/transformer.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace bpdec {

std::size_t KeyBlockVector::count_blocked() const {
  std::size_t n = 0;
  for (bool b : blocked) n += b ? 1 : 0;
  return n;
}

std::vector<std::string> block_param_names(const std::string& prefix) {
  std::vector<std::string> names;
  for (const char* p : {"wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo"}) names.push_back(prefix + ".attn." + p);
  for (const char* p : {"ln1.gamma", "ln1.beta", "ffn.w1", "ffn.b1", "ffn.w2", "ffn.b2", "ln2.gamma", "ln2.beta"}) {
    names.push_back(prefix + "." + p);
  }
  return names;
}

namespace {

template <typename T>
Var<T> maybe_dropout(Var<T> x, double rate, const ForwardContext& ctx) {
  if (ctx.rng == nullptr || rate <= 0.0) return x;
  std::vector<std::uint8_t> keep(x.value().size());
  for (auto& k : keep) k = ctx.rng->uniform() >= rate ? 1 : 0;
  return ops::dropout_mask(x, keep, static_cast<T>(1.0 - rate));
}

template <typename T>
Var<T> linear(Graph<T>& g, Var<T> x, const std::string& w, const std::string& b) {
  return ops::add_bias(ops::matmul(x, g.param(w)), g.param(b));
}

template <typename T>
Var<T> layer_norm_named(Graph<T>& g, Var<T> x, const std::string& prefix, const ModelConfig& config) {
  return ops::layer_norm(x, g.param(prefix + ".gamma"), g.param(prefix + ".beta"),
                         static_cast<T>(config.layer_norm_eps));
}

// Copies the columns [col0, col0 + d) of rows [row0, row0 + s) into a
// contiguous s×d buffer.
template <typename T>
void copy_head(const Tensor<T>& src, std::size_t row0, std::size_t s, std::size_t col0, std::size_t d, T* dst) {
  const std::size_t width = src.cols();
  for (std::size_t r = 0; r < s; ++r) std::copy_n(src.data() + (row0 + r) * width + col0, d, dst + r * d);
}

template <typename T>
void add_head(T* dst_base, std::size_t width, std::size_t row0, std::size_t s, std::size_t col0, std::size_t d,
              const T* src) {
  for (std::size_t r = 0; r < s; ++r) {
    T* dst = dst_base + (row0 + r) * width + col0;
    for (std::size_t j = 0; j < d; ++j) dst[j] += src[r * d + j];
  }
}

}  // namespace

template <typename T>
Var<T> embed(Graph<T>& g, const std::vector<std::int32_t>& ids, std::size_t seq_len, const ModelConfig& config,
             const ForwardContext& ctx) {
  if (seq_len == 0 || seq_len > config.max_seq_len) {
    throw std::invalid_argument("embed: sequence length " + std::to_string(seq_len) + " outside [1, " +
                                std::to_string(config.max_seq_len) + "]");
  }
  if (ids.empty() || ids.size() % seq_len != 0) {
    throw std::invalid_argument("embed: " + std::to_string(ids.size()) + " ids are not whole sequences of " +
                                std::to_string(seq_len));
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= config.vocab_size) {
      throw std::out_of_range("embed: token id " + std::to_string(ids[i]) + " at position " +
                              std::to_string(i % seq_len) + " of sequence " + std::to_string(i / seq_len) +
                              " outside vocabulary of " + std::to_string(config.vocab_size));
    }
  }
  std::vector<std::int32_t> positions(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<std::int32_t>(i % seq_len);
  const std::vector<std::int32_t> segments(ids.size(), 0);

  Var<T> x = ops::gather_rows(g.param("embeddings.token"), ids);
  x = ops::add(x, ops::gather_rows(g.param("embeddings.position"), positions));
  x = ops::add(x, ops::gather_rows(g.param("embeddings.segment"), segments));
  x = layer_norm_named(g, x, "embeddings.ln", config);
  return maybe_dropout(x, config.hidden_dropout, ctx);
}

template <typename T>
Var<T> masked_attention(Var<T> q, Var<T> k, Var<T> v, std::span<const KeyBlockVector> blocks, std::size_t heads,
                        const ForwardContext& ctx, std::vector<Tensor<T>>* weights) {
  if (blocks.empty()) throw std::invalid_argument("masked_attention: no sequences");
  const std::size_t batch = blocks.size();
  const std::size_t s = blocks[0].size();
  const std::size_t h = q.value().cols();
  if (q.shape() != k.shape() || q.shape() != v.shape() || q.value().rows() != batch * s) {
    throw std::invalid_argument("masked_attention: q/k/v shapes " + shape_string(q.shape()) + " " +
                                shape_string(k.shape()) + " " + shape_string(v.shape()) + " do not match " +
                                std::to_string(batch) + " sequences of " + std::to_string(s));
  }
  if (heads == 0 || h % heads != 0) throw std::invalid_argument("masked_attention: width not divisible by heads");
  for (std::size_t b = 0; b < batch; ++b) {
    if (blocks[b].size() != s) throw std::invalid_argument("masked_attention: ragged key-block vectors");
    if (!blocks[b].any_unblocked()) {
      throw std::invalid_argument("masked_attention: every key of sequence " + std::to_string(b) + " is blocked");
    }
  }
  const std::size_t d = h / heads;
  const T scale = T{1} / std::sqrt(static_cast<T>(d));
  const T blocked_logit = static_cast<T>(kBlockedLogit);
  const double drop = ctx.rng != nullptr ? ctx.attention_dropout : 0.0;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - drop));

  // probs: softmax output per (sequence, head); keep: dropout mask.
  auto probs = std::make_shared<std::vector<T>>(batch * heads * s * s);
  auto keep = std::make_shared<std::vector<std::uint8_t>>();
  if (drop > 0.0) keep->resize(probs->size());

  Tensor<T> out({batch * s, h});
  std::vector<T> qh(s * d), kh(s * d), vh(s * d), oh(s * d), pd(s * s);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t hd = 0; hd < heads; ++hd) {
      copy_head(q.value(), b * s, s, hd * d, d, qh.data());
      copy_head(k.value(), b * s, s, hd * d, d, kh.data());
      copy_head(v.value(), b * s, s, hd * d, d, vh.data());
      T* p = probs->data() + (b * heads + hd) * s * s;
      std::fill_n(p, s * s, T{0});
      kernels::gemm_nt(qh.data(), kh.data(), p, s, d, s);
      for (std::size_t r = 0; r < s; ++r) {
        T* row = p + r * s;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t c = 0; c < s; ++c) {
          row[c] = row[c] * scale + (blocks[b][c] ? blocked_logit : T{0});
          mx = std::max(mx, row[c]);
        }
        T total{0};
        for (std::size_t c = 0; c < s; ++c) {
          row[c] = std::exp(row[c] - mx);
          total += row[c];
        }
        for (std::size_t c = 0; c < s; ++c) row[c] /= total;
      }
      const T* pv = p;
      if (drop > 0.0) {
        std::uint8_t* km = keep->data() + (b * heads + hd) * s * s;
        for (std::size_t i = 0; i < s * s; ++i) {
          km[i] = ctx.rng->uniform() >= drop ? 1 : 0;
          pd[i] = km[i] ? p[i] * keep_scale : T{0};
        }
        pv = pd.data();
      }
      std::fill(oh.begin(), oh.end(), T{0});
      kernels::gemm_nn(pv, vh.data(), oh.data(), s, s, d);
      add_head(out.data(), h, b * s, s, hd * d, d, oh.data());
    }
  }

  if (weights != nullptr) {
    weights->clear();
    for (std::size_t b = 0; b < batch; ++b) {
      Tensor<T> w({heads, s, s});
      std::copy_n(probs->data() + b * heads * s * s, heads * s * s, w.data());
      weights->push_back(std::move(w));
    }
  }

  auto backward = [q, k, v, batch, s, h, d, heads, scale, keep_scale, probs, keep](Graph<T>& g, Var<T> self) {
    const Tensor<T>& gout = g.grad(self);
    const bool dropped = !keep->empty();
    std::vector<T> qh(s * d), kh(s * d), vh(s * d), goh(s * d), pd(s * s), dp(s * s), tmp(s * d);
    Tensor<T>* gq = g.requires_grad(q) ? &g.grad(q) : nullptr;
    Tensor<T>* gk = g.requires_grad(k) ? &g.grad(k) : nullptr;
    Tensor<T>* gv = g.requires_grad(v) ? &g.grad(v) : nullptr;
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t hd = 0; hd < heads; ++hd) {
        copy_head(q.value(), b * s, s, hd * d, d, qh.data());
        copy_head(k.value(), b * s, s, hd * d, d, kh.data());
        copy_head(v.value(), b * s, s, hd * d, d, vh.data());
        copy_head(gout, b * s, s, hd * d, d, goh.data());
        const T* p = probs->data() + (b * heads + hd) * s * s;
        const std::uint8_t* km = dropped ? keep->data() + (b * heads + hd) * s * s : nullptr;
        const T* pv = p;
        if (dropped) {
          for (std::size_t i = 0; i < s * s; ++i) pd[i] = km[i] ? p[i] * keep_scale : T{0};
          pv = pd.data();
        }
        if (gv != nullptr) {
          std::fill(tmp.begin(), tmp.end(), T{0});
          kernels::gemm_tn(pv, goh.data(), tmp.data(), s, s, d);
          add_head(gv->data(), h, b * s, s, hd * d, d, tmp.data());
        }
        if (gq == nullptr && gk == nullptr) continue;
        // dP = dO · Vᵀ, undo dropout, then the softmax Jacobian.
        std::fill(dp.begin(), dp.end(), T{0});
        kernels::gemm_nt(goh.data(), vh.data(), dp.data(), s, d, s);
        if (dropped) {
          for (std::size_t i = 0; i < s * s; ++i) dp[i] = km[i] ? dp[i] * keep_scale : T{0};
        }
        for (std::size_t r = 0; r < s; ++r) {
          T dot{0};
          for (std::size_t c = 0; c < s; ++c) dot += dp[r * s + c] * p[r * s + c];
          for (std::size_t c = 0; c < s; ++c) dp[r * s + c] = p[r * s + c] * (dp[r * s + c] - dot) * scale;
        }
        if (gq != nullptr) {
          std::fill(tmp.begin(), tmp.end(), T{0});
          kernels::gemm_nn(dp.data(), kh.data(), tmp.data(), s, s, d);
          add_head(gq->data(), h, b * s, s, hd * d, d, tmp.data());
        }
        if (gk != nullptr) {
          std::fill(tmp.begin(), tmp.end(), T{0});
          kernels::gemm_tn(dp.data(), qh.data(), tmp.data(), s, s, d);
          add_head(gk->data(), h, b * s, s, hd * d, d, tmp.data());
        }
      }
    }
  };
  return q.graph->record("masked_attention", std::move(out), {q, k, v}, std::move(backward));
}

template <typename T>
Var<T> multi_head_attention(Graph<T>& g, Var<T> x, std::span<const KeyBlockVector> blocks, const std::string& prefix,
                            const ModelConfig& config, const ForwardContext& ctx, std::vector<Tensor<T>>* weights) {
  Var<T> q = linear(g, x, prefix + ".wq", prefix + ".bq");
  Var<T> k = linear(g, x, prefix + ".wk", prefix + ".bk");
  Var<T> v = linear(g, x, prefix + ".wv", prefix + ".bv");
  ForwardContext attn_ctx = ctx;
  attn_ctx.attention_dropout = config.attention_dropout;
  Var<T> context = masked_attention(q, k, v, blocks, config.heads, attn_ctx, weights);
  return linear(g, context, prefix + ".wo", prefix + ".bo");
}

template <typename T>
Var<T> transformer_block(Graph<T>& g, Var<T> x, std::span<const KeyBlockVector> blocks, const std::string& prefix,
                         const ModelConfig& config, const ForwardContext& ctx, std::vector<Tensor<T>>* weights) {
  auto ffn = [&](Var<T> in) {
    Var<T> inner = ops::gelu(linear(g, in, prefix + ".ffn.w1", prefix + ".ffn.b1"));
    return linear(g, inner, prefix + ".ffn.w2", prefix + ".ffn.b2");
  };
  if (config.ln_placement == LnPlacement::post) {
    Var<T> a = maybe_dropout(multi_head_attention(g, x, blocks, prefix + ".attn", config, ctx, weights),
                             config.hidden_dropout, ctx);
    Var<T> x1 = layer_norm_named(g, ops::add(x, a), prefix + ".ln1", config);
    Var<T> f = maybe_dropout(ffn(x1), config.hidden_dropout, ctx);
    return layer_norm_named(g, ops::add(x1, f), prefix + ".ln2", config);
  }
  Var<T> a = multi_head_attention(g, layer_norm_named(g, x, prefix + ".ln1", config), blocks, prefix + ".attn", config,
                                  ctx, weights);
  Var<T> x1 = ops::add(x, maybe_dropout(a, config.hidden_dropout, ctx));
  Var<T> f = ffn(layer_norm_named(g, x1, prefix + ".ln2", config));
  return ops::add(x1, maybe_dropout(f, config.hidden_dropout, ctx));
}

template <typename T>
Var<T> encoder_forward(Graph<T>& g, Var<T> embedded, std::span<const KeyBlockVector> blocks, const ModelConfig& config,
                       const ForwardContext& ctx, AttentionTrace<T>* trace) {
  if (trace != nullptr && trace->enabled) trace->layers.assign(config.encoder_layers, {});
  Var<T> x = embedded;
  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    std::vector<Tensor<T>>* weights = trace != nullptr && trace->enabled ? &trace->layers[l] : nullptr;
    x = transformer_block(g, x, blocks, "encoder.layer." + std::to_string(l), config, ctx, weights);
  }
  if (config.ln_placement == LnPlacement::pre && config.encoder_layers > 0) {
    x = layer_norm_named(g, x, "encoder.final_ln", config);
  }
  return x;
}

#define BPDEC_INSTANTIATE_TRANSFORMER(T)                                                                          \
  template Var<T> embed<T>(Graph<T>&, const std::vector<std::int32_t>&, std::size_t, const ModelConfig&,          \
                           const ForwardContext&);                                                                \
  template Var<T> masked_attention<T>(Var<T>, Var<T>, Var<T>, std::span<const KeyBlockVector>, std::size_t,       \
                                      const ForwardContext&, std::vector<Tensor<T>>*);                            \
  template Var<T> multi_head_attention<T>(Graph<T>&, Var<T>, std::span<const KeyBlockVector>, const std::string&, \
                                          const ModelConfig&, const ForwardContext&, std::vector<Tensor<T>>*);    \
  template Var<T> transformer_block<T>(Graph<T>&, Var<T>, std::span<const KeyBlockVector>, const std::string&,    \
                                       const ModelConfig&, const ForwardContext&, std::vector<Tensor<T>>*);       \
  template Var<T> encoder_forward<T>(Graph<T>&, Var<T>, std::span<const KeyBlockVector>, const ModelConfig&,      \
                                     const ForwardContext&, AttentionTrace<T>*);

BPDEC_INSTANTIATE_TRANSFORMER(float)
BPDEC_INSTANTIATE_TRANSFORMER(double)

#undef BPDEC_INSTANTIATE_TRANSFORMER

}  // namespace bpdec
