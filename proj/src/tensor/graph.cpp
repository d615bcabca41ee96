// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/graph.hpp"

#include <cctype>
#include <sstream>

namespace bpdec {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

bool is_valid_param_name(std::string_view name) {
  if (name.empty() || name.front() == '.' || name.back() == '.') return false;
  std::size_t dots = 0;
  char prev = 0;
  for (char c : name) {
    if (c == '.') {
      if (prev == '.') return false;
      ++dots;
    } else if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
                 c == '_')) {
      return false;
    }
    prev = c;
  }
  return dots >= 1;
}

template <typename T>
Var<T> Graph<T>::constant(Tensor<T> value) {
  nodes_.push_back(Node{"const", std::move(value), {}, false, {}});
  return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Graph<T>::param(const std::string& name) {
  if (auto it = param_ids_.find(name); it != param_ids_.end()) return {this, it->second};
  if (store_ == nullptr) throw std::logic_error("graph has no bound parameter store");
  nodes_.push_back(Node{"param:" + name, store_->at(name), {}, true, {}});
  param_ids_.emplace(name, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Graph<T>::variable(Tensor<T> value, std::string_view label) {
  nodes_.push_back(Node{std::string(label), std::move(value), {}, true, {}});
  return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Graph<T>::record(std::string_view op, Tensor<T> value, std::initializer_list<Var<T>> inputs,
                        BackwardFn fn) {
  if (consumed_) throw std::logic_error("graph already differentiated; build a new graph per forward pass");
  bool needs = false;
  for (const auto& in : inputs) {
    if (in.graph != this) throw std::invalid_argument("operation '" + std::string(op) + "' mixes graphs");
    needs = needs || nodes_[in.id].requires_grad;
  }
  nodes_.push_back(Node{std::string(op), std::move(value), {}, needs, needs ? std::move(fn) : BackwardFn{}});
  return {this, nodes_.size() - 1};
}

template <typename T>
Tensor<T>& Graph<T>::grad(Var<T> v) {
  Node& node = nodes_.at(v.id);
  if (node.grad.empty() && !node.value.empty()) node.grad = Tensor<T>::zeros(node.value.shape());
  return node.grad;
}

template <typename T>
ParamStore<T> Graph<T>::backward(Var<T> loss) {
  if (loss.graph != this) throw std::invalid_argument("loss belongs to another graph");
  if (consumed_) throw std::logic_error("backward called twice on the same graph");
  const Tensor<T>& lv = nodes_.at(loss.id).value;
  if (lv.size() != 1) throw std::invalid_argument("backward needs a scalar loss, got shape " + shape_string(lv.shape()));
  consumed_ = true;
  visits_ = 0;
  grad(loss)[0] = T{1};
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || node.grad.empty()) continue;
    node.backward(*this, Var<T>{this, i});
    ++visits_;
  }

  ParamStore<T> out;
  if (store_ != nullptr) {
    for (const auto& [name, value] : *store_) {
      auto it = param_ids_.find(name);
      if (it != param_ids_.end() && !nodes_[it->second].grad.empty()) {
        out.insert(name, std::move(nodes_[it->second].grad));
      } else {
        out.insert(name, Tensor<T>::zeros(value.shape()));
      }
    }
  }
  return out;
}

template <typename T>
std::string Graph<T>::signature() const {
  std::ostringstream os;
  for (const auto& node : nodes_) os << node.op << ' ' << shape_string(node.value.shape()) << '\n';
  return os.str();
}

template class Graph<float>;
template class Graph<double>;

}  // namespace bpdec
