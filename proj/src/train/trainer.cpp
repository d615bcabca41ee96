// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/trainer.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "bpdec/batch_stream.hpp"
#include "bpdec/model.hpp"
#include "bpdec/optimizer.hpp"
#include "bpdec/vocab.hpp"

namespace bpdec {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string checkpoint_name(std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step-%06zu.ckpt", step);
  return buf;
}

void keep_first_records(const std::filesystem::path& path, std::size_t records) {
  std::vector<std::string> kept;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::string line;
    while (kept.size() < records && std::getline(in, line)) kept.push_back(line);
  }
  std::ofstream out(path, std::ios::trunc);
  for (const auto& line : kept) out << line << "\n";
}

RunConfig control_config(RunConfig config) {
  config.model.decoder_layers = 0;
  config.model.gua = {};
  config.model.mix_decoder_prob = 1.0;
  return config;
}

}  // namespace

std::string StepMetrics::to_line() const {
  std::string line = "step=" + std::to_string(step) + " loss=" + shortest(loss) + " lr=" + shortest(lr) +
                     " mix_draw=" + (mix_draw ? "1" : "0");
  for (std::size_t l = 0; l < unmask_counts.size(); ++l) {
    line += " unmask_l" + std::to_string(l + 1) + "=" + std::to_string(unmask_counts[l]);
  }
  return line;
}

template <typename T>
PretrainResult<T> pretrain(const PretrainJob& job) {
  Checkpoint<T> state;
  Vocab vocab;
  RngStreams rngs(job.seed);

  if (job.resume_from) {
    state = load_checkpoint<T>(*job.resume_from);
    if (!state.adam) throw CheckpointError("cannot resume from a checkpoint without optimizer state");
    if (state.vocab.empty()) throw CheckpointError("cannot resume from a checkpoint without a vocabulary");
    vocab = Vocab(state.vocab);
    rngs = RngStreams(state.progress.seed);
    for (const auto& [name, text] : state.progress.rng_states) rngs[name].restore(text);
  } else {
    state.config = job.objective == Objective::baseline ? control_config(job.config) : job.config;
    state.config.train.validate();
    vocab = build_vocab(job.corpus, state.config.model.vocab_size);
    state.config.model.vocab_size = vocab.size();
    state.config.model.validate();
    state.vocab = vocab.corpus_tokens();
    state.params = init_params<T>(state.config.model, rngs["init"], state.config.train.init_std);
    state.adam = AdamState<T>::zeros_like(state.params);
    state.progress.seed = job.seed;
  }
  const RunConfig& config = state.config;
  const ModelConfig& model = config.model;
  const TrainConfig& train = config.train;
  if (train.steps < 1) throw std::invalid_argument("pretrain: steps must be at least 1");

  BatchStream stream(job.corpus, vocab, model.max_seq_len, train.batch_size, MaskingPolicy::from(train));
  if (job.resume_from) stream.seek(state.progress.data);

  const bool write_files = !job.out_dir.empty();
  std::ofstream metrics_out;
  if (write_files) {
    std::filesystem::create_directories(job.out_dir);
    vocab.save(job.out_dir / "vocab.txt");
    keep_first_records(job.out_dir / "metrics.txt", state.progress.step);
    metrics_out.open(job.out_dir / "metrics.txt", std::ios::app);
  }

  auto snapshot = [&] {
    state.progress.data = stream.position();
    state.progress.rng_states.clear();
    for (const auto& [name, rng] : rngs.all()) state.progress.rng_states[name] = rng.state();
  };

  PretrainResult<T> result;
  const AdamHyper hyper = AdamHyper::from(train);
  const std::size_t last = job.stop_at > 0 ? std::min(job.stop_at, train.steps) : train.steps;
  while (state.progress.step < last) {
    const MaskedBatch batch = stream.next(rngs);
    Graph<T> g(state.params);
    StepMetrics m;
    Var<T> loss;
    if (job.objective == Objective::baseline) {
      loss = baseline_forward_loss(g, batch, model, rngs);
    } else {
      auto out = pretrain_forward_loss(g, batch, model, rngs);
      loss = out.loss;
      m.mix_draw = !out.mix_draws.empty() && out.mix_draws.front();
      m.unmask_counts = std::move(out.unmask_counts);
    }
    const T value = loss.value().item();
    if (!std::isfinite(value)) {
      throw NonFiniteLoss("non-finite loss at step " + std::to_string(state.progress.step + 1));
    }
    const ParamStore<T> grads = g.backward(loss);
    const double lr = learning_rate_at(train, state.progress.step + 1);
    adam_step(state.params, *state.adam, grads, hyper, lr);
    ++state.progress.step;

    m.step = state.progress.step;
    m.loss = static_cast<double>(value);
    m.lr = lr;
    if (write_files) metrics_out << m.to_line() << "\n" << std::flush;
    if (job.on_step) job.on_step(m);
    result.metrics.push_back(std::move(m));

    const bool periodic = train.checkpoint_every > 0 && state.progress.step % train.checkpoint_every == 0;
    if (write_files && periodic && state.progress.step != last) {
      snapshot();
      save_checkpoint(state, job.out_dir / checkpoint_name(state.progress.step));
    }
  }
  snapshot();
  if (write_files) save_checkpoint(state, job.out_dir / "final.ckpt");
  result.checkpoint = std::move(state);
  return result;
}

template <typename T>
bool has_pretraining_params(const Checkpoint<T>& ckpt) {
  for (const auto& [name, t] : ckpt.params) {
    if (!is_encoder_param(name)) return true;
  }
  return false;
}

template <typename T>
Checkpoint<T> export_encoder(const Checkpoint<T>& ckpt) {
  Checkpoint<T> out;
  out.config = ckpt.config;
  out.config.model.decoder_layers = 0;
  out.config.model.gua = {};
  out.config.model.mix_decoder_prob = ModelConfig{}.mix_decoder_prob;
  out.progress = ckpt.progress;
  out.vocab = ckpt.vocab;

  const auto layout = param_layout(out.config.model, false);
  for (const auto& spec : layout) {
    if (!ckpt.params.contains(spec.name)) throw CheckpointError("export: missing parameter '" + spec.name + "'");
    const auto& t = ckpt.params.at(spec.name);
    if (t.shape() != spec.shape) {
      throw CheckpointError("export: parameter '" + spec.name + "' has shape " + shape_string(t.shape()) +
                            ", expected " + shape_string(spec.shape));
    }
    out.params.insert(spec.name, t);
  }
  for (const auto& [name, t] : ckpt.params) {
    if (is_encoder_param(name) && !out.params.contains(name)) {
      throw CheckpointError("export: unexpected encoder parameter '" + name + "'");
    }
  }
  return out;
}

template PretrainResult<float> pretrain<float>(const PretrainJob&);
template PretrainResult<double> pretrain<double>(const PretrainJob&);
template Checkpoint<float> export_encoder<float>(const Checkpoint<float>&);
template Checkpoint<double> export_encoder<double>(const Checkpoint<double>&);
template bool has_pretraining_params<float>(const Checkpoint<float>&);
template bool has_pretraining_params<double>(const Checkpoint<double>&);

}  // namespace bpdec
