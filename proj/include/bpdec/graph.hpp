// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bpdec/param_store.hpp"
#include "bpdec/tensor.hpp"

namespace bpdec {

template <typename T>
class Graph;

/// Handle to a value recorded in a Graph.
template <typename T>
struct Var {
  Graph<T>* graph = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return graph->value(*this); }
  const Shape& shape() const { return graph->value(*this).shape(); }
};

/// Define-by-run reverse-mode tape.
///
/// Every operation appends one record holding its output value and, when
/// any input tracks gradients, a closure that propagates the output
/// gradient into the inputs. `backward` walks the records once in reverse
/// execution order. A graph can be differentiated only once; a second call
/// to `backward` throws `std::logic_error`.
///
/// Confined to one thread for its whole lifetime.
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, Var<T> self)>;

  Graph() = default;
  explicit Graph(const ParamStore<T>& params) : store_(&params) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Binds a parameter store; `param(name)` looks names up there.
  void bind(const ParamStore<T>& params) { store_ = &params; }
  const ParamStore<T>* bound_store() const noexcept { return store_; }

  Var<T> constant(Tensor<T> value);

  /// Leaf that tracks gradients. Values come from the bound store; repeated
  /// requests for one name return the same leaf, so all uses accumulate
  /// into one gradient.
  Var<T> param(const std::string& name);

  /// Leaf that tracks gradients but is not part of any store.
  Var<T> variable(Tensor<T> value, std::string_view label = "var");

  /// Appends an operation record. `fn` may be empty for ops with no
  /// differentiable inputs; it is dropped when no input tracks gradients.
  Var<T> record(std::string_view op, Tensor<T> value, std::initializer_list<Var<T>> inputs,
                BackwardFn fn);

  const Tensor<T>& value(Var<T> v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var<T> v) const { return nodes_.at(v.id).requires_grad; }

  /// Gradient accumulator for a record; allocated (zeroed) on first access.
  Tensor<T>& grad(Var<T> v);
  bool has_grad(Var<T> v) const { return !nodes_.at(v.id).grad.empty(); }

  /// Differentiates a scalar loss. Returns a gradient for every parameter
  /// of the bound store (zeros where the loss does not depend on it).
  /// Leaves created with `variable` keep their gradients readable via
  /// `grad`.
  ParamStore<T> backward(Var<T> loss);

  bool consumed() const noexcept { return consumed_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Op name and output shape of every record, in execution order; one
  /// record per line. Two forward passes with the same topology and shapes
  /// have equal signatures.
  std::string signature() const;

  /// Number of backward closures invoked by the last `backward` call.
  std::size_t backward_visits() const noexcept { return visits_; }

 private:
  struct Node {
    std::string op;
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  const ParamStore<T>* store_ = nullptr;
  std::vector<Node> nodes_;
  std::map<std::string, std::size_t, std::less<>> param_ids_;
  bool consumed_ = false;
  std::size_t visits_ = 0;
};

extern template class Graph<float>;
extern template class Graph<double>;

/// Differentiable operations. All take and return handles into the same
/// graph. Matrices are rank-2; "rows" variants treat any rank as
/// [rows × last extent].
namespace ops {

template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
template <typename T> Var<T> transpose(Var<T> a);
template <typename T> Var<T> add(Var<T> a, Var<T> b);
/// x[r×c] + bias[c] broadcast over rows.
template <typename T> Var<T> add_bias(Var<T> x, Var<T> bias);
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
template <typename T> Var<T> scale(Var<T> a, T factor);
/// Sum of all elements, shape {1}.
template <typename T> Var<T> sum(Var<T> a);
template <typename T> Var<T> softmax_rows(Var<T> x);
template <typename T> Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps);
/// tanh approximation: 0.5·x·(1 + tanh(√(2/π)·(x + 0.044715·x³))).
template <typename T> Var<T> gelu(Var<T> x);
/// Rows of `table` picked by `indices`; gradient scatter-adds back.
template <typename T> Var<T> gather_rows(Var<T> table, const std::vector<std::int32_t>& indices);
/// Output rows copied block by block (`block_rows` rows each) from `b`
/// where `take_b[block]` holds and from `a` otherwise.
template <typename T> Var<T> select_blocks(Var<T> a, Var<T> b, const std::vector<bool>& take_b, std::size_t block_rows);
/// Inverted dropout with a precomputed keep mask (1 = keep).
template <typename T> Var<T> dropout_mask(Var<T> x, const std::vector<std::uint8_t>& keep, T keep_prob);
/// Mean over active rows of −log softmax(logits)[label]. Shape {1}.
template <typename T> Var<T> cross_entropy_masked(Var<T> logits, const std::vector<std::int32_t>& labels,
                                                  const std::vector<bool>& active);

}  // namespace ops

/// Raw row-major kernels shared by ops and reference code. All loops run in
/// a fixed order so repeated runs are bit-identical.
namespace kernels {

/// c[m×n] += a[m×k] · b[k×n]
template <typename T> void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n);
/// c[m×n] += a[k×m]ᵀ · b[k×n]
template <typename T> void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n);
/// c[m×n] += a[m×k] · b[n×k]ᵀ
template <typename T> void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n);

}  // namespace kernels

}  // namespace bpdec
