// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/model_gradcheck.hpp"

#include <cstdio>

#include "bpdec/model.hpp"
#include "bpdec/vocab.hpp"

namespace bpdec {

MaskedBatch random_masked_batch(const ModelConfig& config, std::size_t batch, std::uint64_t seed,
                                const MaskingPolicy& policy) {
  config.validate();
  const std::size_t s = config.max_seq_len;
  Rng data(seed, "synthetic-batch");
  Rng masking(seed, "masking");
  MaskedBatch out;
  const auto first = static_cast<std::uint64_t>(kFirstCorpusId);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t lo = std::max<std::size_t>(3, s / 2);
    const std::size_t len = lo + data.below(s - lo + 1);
    std::vector<std::int32_t> ids(s, kPadId);
    ids[0] = kClsId;
    for (std::size_t i = 1; i + 1 < len; ++i) ids[i] = static_cast<std::int32_t>(first + data.below(config.vocab_size - first));
    ids[len - 1] = kSepId;
    out.append(*apply_mlm_masking(ids, config.vocab_size, policy, masking));
  }
  return out;
}

std::string ModelGradcheckReport::to_text() const {
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof buf, "parameters: %zu\nchecked: %zu\nmax_rel_error: %.6e\nthreshold: %.1e\n", parameters,
                result.checked, result.max_rel_error, threshold);
  out += buf;
  for (const auto& e : result.worst) {
    std::snprintf(buf, sizeof buf, "worst: %s[%zu] analytic=%.9e numeric=%.9e rel=%.3e\n", e.name.c_str(), e.index,
                  e.analytic, e.numeric, e.rel_error);
    out += buf;
  }
  out += passed() ? "result: PASS\n" : "result: FAIL\n";
  return out;
}

ModelGradcheckReport model_gradcheck(const RunConfig& config, std::uint64_t seed, const GradcheckOptions& options,
                                     std::size_t batch, double threshold) {
  const ModelConfig& model = config.model;
  Rng init(seed, "init");
  const ParamStore<double> params = init_params<double>(model, init, config.train.init_std);
  const MaskedBatch data = random_masked_batch(model, batch, seed, MaskingPolicy::from(config.train));
  const RngStreams frozen(seed);
  GraphLossFn<double> f = [&](Graph<double>& g) {
    RngStreams rngs = frozen;
    return pretrain_forward_loss(g, data, model, rngs).loss;
  };
  ModelGradcheckReport report;
  report.threshold = threshold;
  report.parameters = params.scalar_count();
  report.result = finite_diff_check(f, params, options);
  return report;
}

}  // namespace bpdec
