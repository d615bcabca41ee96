// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bpdec {

double gradcheck_rel_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

template <typename T>
T evaluate(const GraphLossFn<T>& f, const ParamStore<T>& params) {
  Graph<T> g(params);
  Var<T> loss = f(g);
  if (loss.value().size() != 1) throw std::invalid_argument("finite_diff_check: loss is not a scalar");
  return loss.value().item();
}

std::vector<std::size_t> checked_indices(std::size_t n, std::size_t limit) {
  std::vector<std::size_t> out;
  if (limit == 0 || limit >= n) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  if (limit == 1) return {0};
  for (std::size_t k = 0; k < limit; ++k) out.push_back(k * (n - 1) / (limit - 1));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

template <typename T>
GradcheckResult finite_diff_check(const GraphLossFn<T>& f, const ParamStore<T>& params,
                                  const GradcheckOptions& options) {
  if (!(options.step > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");
  if (!(options.floor > 0.0)) throw std::invalid_argument("finite_diff_check: floor must be positive");

  ParamStore<T> analytic;
  T reference{};
  {
    Graph<T> g(params);
    Var<T> loss = f(g);
    if (loss.value().size() != 1) throw std::invalid_argument("finite_diff_check: loss is not a scalar");
    reference = loss.value().item();
    analytic = g.backward(loss);
  }
  const T again = evaluate(f, params);
  if (!(again == reference)) {
    throw NonDeterministicLoss("finite_diff_check: loss differs between two evaluations at identical parameters (" +
                               std::to_string(static_cast<double>(reference)) + " vs " +
                               std::to_string(static_cast<double>(again)) + "); freeze the random state");
  }

  GradcheckResult result;
  std::vector<GradcheckEntry> entries;
  ParamStore<T> probe = params;
  const T delta = static_cast<T>(options.step);
  for (const auto& name : params.names()) {
    auto& values = probe.at(name).storage();
    const auto& grad = analytic.at(name).storage();
    for (std::size_t i : checked_indices(values.size(), options.max_per_tensor)) {
      const T saved = values[i];
      values[i] = saved + delta;
      const T plus = evaluate(f, probe);
      values[i] = saved - delta;
      const T minus = evaluate(f, probe);
      values[i] = saved;
      const double numeric = (static_cast<double>(plus) - static_cast<double>(minus)) / (2.0 * options.step);
      const double a = static_cast<double>(grad[i]);
      entries.push_back({name, i, a, numeric, gradcheck_rel_error(a, numeric, options.floor)});
      ++result.checked;
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const GradcheckEntry& x, const GradcheckEntry& y) { return x.rel_error > y.rel_error; });
  if (!entries.empty()) result.max_rel_error = entries.front().rel_error;
  entries.resize(std::min(entries.size(), options.report));
  result.worst = std::move(entries);
  return result;
}

template GradcheckResult finite_diff_check<float>(const GraphLossFn<float>&, const ParamStore<float>&,
                                                  const GradcheckOptions&);
template GradcheckResult finite_diff_check<double>(const GraphLossFn<double>&, const ParamStore<double>&,
                                                   const GradcheckOptions&);

}  // namespace bpdec
