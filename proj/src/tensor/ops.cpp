// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "bpdec/graph.hpp"

namespace bpdec {

namespace kernels {

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const T* arow = a + p * m;
    const T* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = arow[i];
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  // b is n×k; transpose once so the inner loop streams contiguous rows.
  std::vector<T> bt(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  gemm_nn(a, bt.data(), c, m, k, n);
}

template void gemm_nn<float>(const float*, const float*, float*, std::size_t, std::size_t, std::size_t);
template void gemm_nn<double>(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);
template void gemm_tn<float>(const float*, const float*, float*, std::size_t, std::size_t, std::size_t);
template void gemm_tn<double>(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);
template void gemm_nt<float>(const float*, const float*, float*, std::size_t, std::size_t, std::size_t);
template void gemm_nt<double>(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);

}  // namespace kernels

namespace ops {

namespace {

template <typename T>
void require_matrix(Var<T> v, const char* op) {
  if (v.shape().size() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected a matrix, got shape " + shape_string(v.shape()));
  }
}

template <typename T>
void require_same_shape(Var<T> a, Var<T> b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  }
}

template <typename T>
void require_same_graph(Var<T> a, Var<T> b, const char* op) {
  if (a.graph != b.graph) throw std::invalid_argument(std::string(op) + ": operands belong to different graphs");
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "matmul");
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw std::invalid_argument("matmul: inner extents disagree, " + shape_string(a.shape()) + " x " +
                                shape_string(b.shape()));
  }
  Tensor<T> out({m, n});
  kernels::gemm_nn(a.value().data(), b.value().data(), out.data(), m, k, n);
  return a.graph->record("matmul", std::move(out), {a, b}, [a, b, m, k, n](Graph<T>& g, Var<T> self) {
    const Tensor<T>& gout = g.grad(self);
    if (g.requires_grad(a)) kernels::gemm_nt(gout.data(), b.value().data(), g.grad(a).data(), m, n, k);
    if (g.requires_grad(b)) kernels::gemm_tn(a.value().data(), gout.data(), g.grad(b).data(), k, m, n);
  });
}

template <typename T>
Var<T> transpose(Var<T> a) {
  require_matrix(a, "transpose");
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  Tensor<T> out({c, r});
  const Tensor<T>& av = a.value();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(j, i) = av(i, j);
  return a.graph->record("transpose", std::move(out), {a}, [a, r, c](Graph<T>& g, Var<T> self) {
    const Tensor<T>& gout = g.grad(self);
    Tensor<T>& ga = g.grad(a);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga(i, j) += gout(j, i);
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "add");
  require_same_shape(a, b, "add");
  Tensor<T> out = a.value();
  const Tensor<T>& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.graph->record("add", std::move(out), {a, b}, [a, b](Graph<T>& g, Var<T> self) {
    const Tensor<T>& gout = g.grad(self);
    for (Var<T> in : {a, b}) {
      if (!g.requires_grad(in)) continue;
      Tensor<T>& gi = g.grad(in);
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += gout[i];
    }
  });
}

template <typename T>
Var<T> add_bias(Var<T> x, Var<T> bias) {
  require_same_graph(x, bias, "add_bias");
  const std::size_t cols = x.value().cols();
  if (bias.value().size() != cols) {
    throw std::invalid_argument("add_bias: bias shape " + shape_string(bias.shape()) + " does not fit rows of " +
                                shape_string(x.shape()));
  }
  Tensor<T> out = x.value();
  const std::size_t rows = out.rows();
  const Tensor<T>& bv = bias.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
  return x.graph->record("add_bias", std::move(out), {x, bias}, [x, bias, rows, cols](Graph<T>& g, Var<T> self) {
    const Tensor<T>& gout = g.grad(self);
    if (g.requires_grad(x)) {
      Tensor<T>& gx = g.grad(x);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gout[i];
    }
    if (g.requires_grad(bias)) {
      Tensor<T>& gb = g.grad(bias);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gb[c] += gout[r * cols + c];
    }
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_graph(a, b, "mul");
  require_same_shape(a, b, "mul");
  Tensor<T> out = a.value();
  const Tensor<T>& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.graph->record("mul", std::move(out), {a, b}, [a, b](Graph<T>& g, Var<T> self) {
    const Tensor<T>& gout = g.grad(self);
    const Tensor<T>& av = a.value();
    const Tensor<T>& bv = b.value();
    if (g.requires_grad(a)) {
      Tensor<T>& ga = g.grad(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gout[i] * bv[i];
    }
    if (g.requires_grad(b)) {
      Tensor<T>& gb = g.grad(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gout[i] * av[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Tensor<T> out = a.value();
  for (auto& v : out.storage()) v *= factor;
  return a.graph->record("scale", std::move(out), {a}, [a, factor](Graph<T>& g, Var<T> self) {
    const Tensor<T>& gout = g.grad(self);
    Tensor<T>& ga = g.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gout[i] * factor;
  });
}

template <typename T>
Var<T> sum(Var<T> a) {
  T total{0};
  for (T v : a.value().values()) total += v;
  return a.graph->record("sum", Tensor<T>::scalar(total), {a}, [a](Graph<T>& g, Var<T> self) {
    const T gout = g.grad(self)[0];
    Tensor<T>& ga = g.grad(a);
    for (auto& v : ga.storage()) v += gout;
  });
}

template <typename T>
Var<T> softmax_rows(Var<T> x) {
  Tensor<T> out = x.value();
  const std::size_t rows = out.rows(), cols = out.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = out.row(r);
    T mx = -std::numeric_limits<T>::infinity();
    for (T v : row) mx = std::max(mx, v);
    T total{0};
    for (T& v : row) {
      v = std::exp(v - mx);
      total += v;
    }
    for (T& v : row) v /= total;
  }
  return x.graph->record("softmax_rows", std::move(out), {x}, [x, rows, cols](Graph<T>& g, Var<T> self) {
    const Tensor<T>& y = g.value(self);
    const Tensor<T>& gout = g.grad(self);
    Tensor<T>& gx = g.grad(x);
    for (std::size_t r = 0; r < rows; ++r) {
      T dot{0};
      for (std::size_t c = 0; c < cols; ++c) dot += gout(r, c) * y(r, c);
      for (std::size_t c = 0; c < cols; ++c) gx(r, c) += y(r, c) * (gout(r, c) - dot);
    }
  });
}

template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps) {
  require_same_graph(x, gamma, "layer_norm");
  require_same_graph(x, beta, "layer_norm");
  const std::size_t h = x.value().cols();
  if (h < 2) throw std::invalid_argument("layer_norm: normalized width must be at least 2, got " + std::to_string(h));
  if (!(eps > T{0})) throw std::invalid_argument("layer_norm: eps must be positive");
  if (gamma.value().size() != h || beta.value().size() != h) {
    throw std::invalid_argument("layer_norm: gamma/beta must have " + std::to_string(h) + " entries");
  }
  const std::size_t rows = x.value().rows();
  Tensor<T> xhat(x.shape());
  std::vector<T> inv_std(rows);
  Tensor<T> out(x.shape());
  const Tensor<T>& xv = x.value();
  const Tensor<T>& gv = gamma.value();
  const Tensor<T>& bv = beta.value();
  for (std::size_t r = 0; r < rows; ++r) {
    T mean{0};
    for (std::size_t c = 0; c < h; ++c) mean += xv(r, c);
    mean /= static_cast<T>(h);
    T var{0};
    for (std::size_t c = 0; c < h; ++c) {
      const T d = xv(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<T>(h);
    const T inv = T{1} / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t c = 0; c < h; ++c) {
      xhat(r, c) = (xv(r, c) - mean) * inv;
      out(r, c) = gv[c] * xhat(r, c) + bv[c];
    }
  }
  return x.graph->record(
      "layer_norm", std::move(out), {x, gamma, beta},
      [x, gamma, beta, rows, h, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph<T>& g, Var<T> self) {
        const Tensor<T>& gout = g.grad(self);
        const Tensor<T>& gv = gamma.value();
        if (g.requires_grad(gamma)) {
          Tensor<T>& gg = g.grad(gamma);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < h; ++c) gg[c] += gout(r, c) * xhat(r, c);
        }
        if (g.requires_grad(beta)) {
          Tensor<T>& gb = g.grad(beta);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < h; ++c) gb[c] += gout(r, c);
        }
        if (!g.requires_grad(x)) return;
        Tensor<T>& gx = g.grad(x);
        const T hn = static_cast<T>(h);
        for (std::size_t r = 0; r < rows; ++r) {
          T sum_d{0}, sum_dx{0};
          for (std::size_t c = 0; c < h; ++c) {
            const T d = gout(r, c) * gv[c];
            sum_d += d;
            sum_dx += d * xhat(r, c);
          }
          const T k = inv_std[r] / hn;
          for (std::size_t c = 0; c < h; ++c) {
            const T d = gout(r, c) * gv[c];
            gx(r, c) += k * (hn * d - sum_d - xhat(r, c) * sum_dx);
          }
        }
      });
}

template <typename T>
Var<T> gelu(Var<T> x) {
  constexpr T kSqrt2OverPi = static_cast<T>(0.7978845608028654);
  constexpr T kCubic = static_cast<T>(0.044715);
  Tensor<T> out = x.value();
  for (T& v : out.storage()) {
    const T u = kSqrt2OverPi * (v + kCubic * v * v * v);
    v = T{0.5} * v * (T{1} + std::tanh(u));
  }
  return x.graph->record("gelu", std::move(out), {x}, [x](Graph<T>& g, Var<T> self) {
    const Tensor<T>& gout = g.grad(self);
    const Tensor<T>& xv = x.value();
    Tensor<T>& gx = g.grad(x);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const T v = xv[i];
      const T t = std::tanh(kSqrt2OverPi * (v + kCubic * v * v * v));
      const T du = kSqrt2OverPi * (T{1} + T{3} * kCubic * v * v);
      gx[i] += gout[i] * (T{0.5} * (T{1} + t) + T{0.5} * v * (T{1} - t * t) * du);
    }
  });
}

template <typename T>
Var<T> gather_rows(Var<T> table, const std::vector<std::int32_t>& indices) {
  require_matrix(table, "gather_rows");
  const std::size_t n_rows = table.shape()[0], width = table.shape()[1];
  Tensor<T> out({indices.size(), width});
  const Tensor<T>& tv = table.value();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto idx = indices[i];
    if (idx < 0 || static_cast<std::size_t>(idx) >= n_rows) {
      throw std::out_of_range("gather_rows: index " + std::to_string(idx) + " at position " + std::to_string(i) +
                              " outside [0, " + std::to_string(n_rows) + ")");
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(idx) * width, width, out.data() + i * width);
  }
  return table.graph->record("gather_rows", std::move(out), {table}, [table, indices, width](Graph<T>& g, Var<T> self) {
    const Tensor<T>& gout = g.grad(self);
    Tensor<T>& gt = g.grad(table);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      T* dst = gt.data() + static_cast<std::size_t>(indices[i]) * width;
      const T* src = gout.data() + i * width;
      for (std::size_t c = 0; c < width; ++c) dst[c] += src[c];
    }
  });
}

template <typename T>
Var<T> select_blocks(Var<T> a, Var<T> b, const std::vector<bool>& take_b, std::size_t block_rows) {
  require_same_graph(a, b, "select_blocks");
  require_same_shape(a, b, "select_blocks");
  const std::size_t width = a.value().cols();
  if (block_rows == 0 || take_b.size() * block_rows != a.value().rows()) {
    throw std::invalid_argument("select_blocks: " + std::to_string(take_b.size()) + " blocks of " +
                                std::to_string(block_rows) + " rows do not cover " + shape_string(a.shape()));
  }
  Tensor<T> out(a.shape());
  const std::size_t block = block_rows * width;
  for (std::size_t i = 0; i < take_b.size(); ++i) {
    const Tensor<T>& src = take_b[i] ? b.value() : a.value();
    std::copy_n(src.data() + i * block, block, out.data() + i * block);
  }
  return a.graph->record("select_blocks", std::move(out), {a, b}, [a, b, take_b, block](Graph<T>& g, Var<T> self) {
    const Tensor<T>& gout = g.grad(self);
    for (std::size_t i = 0; i < take_b.size(); ++i) {
      const Var<T> src = take_b[i] ? b : a;
      if (!g.requires_grad(src)) continue;
      Tensor<T>& gs = g.grad(src);
      for (std::size_t j = i * block; j < (i + 1) * block; ++j) gs[j] += gout[j];
    }
  });
}

template <typename T>
Var<T> dropout_mask(Var<T> x, const std::vector<std::uint8_t>& keep, T keep_prob) {
  if (keep.size() != x.value().size()) throw std::invalid_argument("dropout_mask: mask size mismatch");
  if (!(keep_prob > T{0})) throw std::invalid_argument("dropout_mask: keep probability must be positive");
  Tensor<T> out = x.value();
  const T inv = T{1} / keep_prob;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = keep[i] ? out[i] * inv : T{0};
  return x.graph->record("dropout", std::move(out), {x}, [x, keep, inv](Graph<T>& g, Var<T> self) {
    const Tensor<T>& gout = g.grad(self);
    Tensor<T>& gx = g.grad(x);
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (keep[i]) gx[i] += gout[i] * inv;
  });
}

template <typename T>
Var<T> cross_entropy_masked(Var<T> logits, const std::vector<std::int32_t>& labels, const std::vector<bool>& active) {
  require_matrix(logits, "cross_entropy_masked");
  const std::size_t rows = logits.shape()[0], vocab = logits.shape()[1];
  if (labels.size() != rows || active.size() != rows) {
    throw std::invalid_argument("cross_entropy_masked: labels/active length must equal " + std::to_string(rows));
  }
  std::size_t n_active = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!active[r]) continue;
    ++n_active;
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= vocab) {
      throw std::out_of_range("cross_entropy_masked: label " + std::to_string(labels[r]) + " at row " +
                              std::to_string(r) + " outside [0, " + std::to_string(vocab) + ")");
    }
  }
  if (n_active == 0) throw std::invalid_argument("cross_entropy_masked: no active positions");

  const Tensor<T>& lv = logits.value();
  Tensor<T> probs({rows, vocab});
  T total{0};
  for (std::size_t r = 0; r < rows; ++r) {
    if (!active[r]) continue;
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t c = 0; c < vocab; ++c) mx = std::max(mx, lv(r, c));
    T z{0};
    for (std::size_t c = 0; c < vocab; ++c) {
      probs(r, c) = std::exp(lv(r, c) - mx);
      z += probs(r, c);
    }
    for (std::size_t c = 0; c < vocab; ++c) probs(r, c) /= z;
    total += std::log(z) + mx - lv(r, static_cast<std::size_t>(labels[r]));
  }
  const T inv_n = T{1} / static_cast<T>(n_active);
  return logits.graph->record(
      "cross_entropy_masked", Tensor<T>::scalar(total * inv_n), {logits},
      [logits, labels, active, rows, vocab, inv_n, probs = std::move(probs)](Graph<T>& g, Var<T> self) {
        const T gout = g.grad(self)[0] * inv_n;
        Tensor<T>& gl = g.grad(logits);
        for (std::size_t r = 0; r < rows; ++r) {
          if (!active[r]) continue;
          for (std::size_t c = 0; c < vocab; ++c) gl(r, c) += gout * probs(r, c);
          gl(r, static_cast<std::size_t>(labels[r])) -= gout;
        }
      });
}

#define BPDEC_INSTANTIATE_OPS(T)                                                                           \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                                               \
  template Var<T> transpose<T>(Var<T>);                                                                    \
  template Var<T> add<T>(Var<T>, Var<T>);                                                                  \
  template Var<T> add_bias<T>(Var<T>, Var<T>);                                                             \
  template Var<T> mul<T>(Var<T>, Var<T>);                                                                  \
  template Var<T> scale<T>(Var<T>, T);                                                                     \
  template Var<T> sum<T>(Var<T>);                                                                          \
  template Var<T> softmax_rows<T>(Var<T>);                                                                 \
  template Var<T> layer_norm<T>(Var<T>, Var<T>, Var<T>, T);                                                \
  template Var<T> gelu<T>(Var<T>);                                                                         \
  template Var<T> gather_rows<T>(Var<T>, const std::vector<std::int32_t>&);                                \
  template Var<T> select_blocks<T>(Var<T>, Var<T>, const std::vector<bool>&, std::size_t);                 \
  template Var<T> dropout_mask<T>(Var<T>, const std::vector<std::uint8_t>&, T);                            \
  template Var<T> cross_entropy_masked<T>(Var<T>, const std::vector<std::int32_t>&, const std::vector<bool>&);

BPDEC_INSTANTIATE_OPS(float)
BPDEC_INSTANTIATE_OPS(double)

#undef BPDEC_INSTANTIATE_OPS

}  // namespace ops
}  // namespace bpdec
