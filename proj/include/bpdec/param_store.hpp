// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "bpdec/tensor.hpp"

namespace bpdec {

/// Returns true when `name` follows the parameter naming grammar:
/// dot-separated segments of [a-z0-9_], at least two segments, no empty
/// segment. Examples: "embeddings.token", "encoder.layer.3.attn.wq".
bool is_valid_param_name(std::string_view name);

/// Named parameter tensors. Iteration is in lexicographic name order, which
/// is the canonical order for serialization and for gradient reductions.
template <typename T>
class ParamStore {
 public:
  using Map = std::map<std::string, Tensor<T>, std::less<>>;

  void insert(const std::string& name, Tensor<T> value) {
    if (!is_valid_param_name(name)) {
      throw std::invalid_argument("invalid parameter name '" + name + "'");
    }
    if (!params_.emplace(name, std::move(value)).second) {
      throw std::invalid_argument("duplicate parameter name '" + name + "'");
    }
  }

  bool contains(std::string_view name) const { return params_.find(name) != params_.end(); }

  const Tensor<T>& at(std::string_view name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
    return it->second;
  }
  Tensor<T>& at(std::string_view name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
    return it->second;
  }

  void erase(std::string_view name) {
    auto it = params_.find(name);
    if (it != params_.end()) params_.erase(it);
  }

  std::size_t size() const noexcept { return params_.size(); }
  bool empty() const noexcept { return params_.empty(); }

  /// Total number of scalar parameters.
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.size();
    return n;
  }

  std::set<std::string> names() const {
    std::set<std::string> out;
    for (const auto& [name, t] : params_) out.insert(name);
    return out;
  }

  /// Same names, same shapes, all zeros.
  ParamStore zeros_like() const {
    ParamStore out;
    for (const auto& [name, t] : params_) out.params_.emplace(name, Tensor<T>::zeros(t.shape()));
    return out;
  }

  auto begin() noexcept { return params_.begin(); }
  auto end() noexcept { return params_.end(); }
  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }

  bool operator==(const ParamStore& other) const = default;

 private:
  Map params_;
};

}  // namespace bpdec
