// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "bpdec/config.hpp"
#include "bpdec/gradcheck.hpp"
#include "bpdec/masking.hpp"

namespace bpdec {

/// `batch` sequences of random corpus ids (lengths between s/2 and s,
/// padded to s = max_seq_len) masked with `policy` from the "masking"
/// stream of `seed`.
MaskedBatch random_masked_batch(const ModelConfig& config, std::size_t batch, std::uint64_t seed,
                                const MaskingPolicy& policy = {});

struct ModelGradcheckReport {
  GradcheckResult result;
  std::size_t parameters = 0;
  double threshold = 1e-4;
  bool passed() const { return result.max_rel_error < threshold; }
  std::string to_text() const;
};

/// Full pretraining loss of `config` at 64-bit on a random batch, with every
/// random stream frozen at its state for `seed`, checked against central
/// differences.
ModelGradcheckReport model_gradcheck(const RunConfig& config, std::uint64_t seed, const GradcheckOptions& options = {},
                                     std::size_t batch = 2, double threshold = 1e-4);

}  // namespace bpdec
