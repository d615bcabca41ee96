// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpdec/graph.hpp"
#include "bpdec/param_store.hpp"

namespace bpdec {

/// Builds a scalar loss on a graph already bound to the parameters under
/// test. Must be deterministic: any randomness has to be restored from a
/// frozen state on every call.
template <typename T>
using GraphLossFn = std::function<Var<T>(Graph<T>&)>;

struct GradcheckOptions {
  double step = 1e-5;
  /// Denominator floor of the relative error |a − n| / max(|a|, |n|, floor).
  double floor = 1e-5;
  /// Entries kept in `worst`.
  std::size_t report = 5;
  /// Scalars checked per tensor; 0 checks all, otherwise an evenly spaced
  /// subset including the first and last element.
  std::size_t max_per_tensor = 0;
};

struct GradcheckEntry {
  std::string name;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::vector<GradcheckEntry> worst;  // descending rel_error
};

/// Thrown when two evaluations at identical parameters disagree.
class NonDeterministicLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compares reverse-mode gradients of `f` with central differences
/// (f(p + δ) − f(p − δ)) / 2δ for every checked parameter scalar.
template <typename T>
GradcheckResult finite_diff_check(const GraphLossFn<T>& f, const ParamStore<T>& params,
                                  const GradcheckOptions& options = {});

/// Relative error used by finite_diff_check.
double gradcheck_rel_error(double analytic, double numeric, double floor);

}  // namespace bpdec
