// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/finetune.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bpdec/masking.hpp"
#include "bpdec/model.hpp"
#include "bpdec/optimizer.hpp"
#include "bpdec/trainer.hpp"
#include "bpdec/vocab.hpp"

namespace bpdec {

void FinetuneTask::validate() const {
  if (labels < 2) throw std::invalid_argument("finetune: label count must be at least 2");
  if (train.empty()) throw std::invalid_argument("finetune: empty training split");
  if (dev.empty()) throw std::invalid_argument("finetune: empty dev split");
  if (epochs == 0 || batch_size == 0) throw std::invalid_argument("finetune: epochs and batch size must be positive");
  for (const auto* split : {&train, &dev}) {
    for (const auto& row : *split) {
      if (row.label < 0 || static_cast<std::size_t>(row.label) >= labels) {
        throw std::invalid_argument("finetune: label " + std::to_string(row.label) + " outside [0, " +
                                    std::to_string(labels) + ")");
      }
    }
  }
}

FinetuneTask split_classification_task(std::span<const LabeledLine> rows) {
  FinetuneTask task;
  int max_label = 1;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    (i % 5 == 4 ? task.dev : task.train).push_back(rows[i]);
    max_label = std::max(max_label, rows[i].label);
  }
  task.labels = static_cast<std::size_t>(max_label) + 1;
  return task;
}

FinetuneTask load_classification_task(const std::filesystem::path& path) {
  std::vector<LabeledLine> rows;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(i + 1) + ": expected label<TAB>text");
    }
    LabeledLine row;
    try {
      std::size_t used = 0;
      row.label = std::stoi(line.substr(0, tab), &used);
      if (used != tab) throw std::invalid_argument("label");
    } catch (const std::exception&) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(i + 1) + ": bad label '" +
                                  line.substr(0, tab) + "'");
    }
    row.text = line.substr(tab + 1);
    rows.push_back(std::move(row));
  }
  return split_classification_task(rows);
}

namespace {

struct EncodedRows {
  std::vector<std::int32_t> ids;
  std::vector<KeyBlockVector> blocks;
  std::vector<std::int32_t> labels;
};

EncodedRows encode_rows(std::span<const LabeledLine> rows, std::span<const std::size_t> order, const Vocab& vocab,
                        std::size_t seq_len) {
  EncodedRows out;
  for (std::size_t idx : order) {
    const auto ids = encode_line(rows[idx].text, vocab, seq_len);
    std::vector<bool> pad(seq_len);
    for (std::size_t i = 0; i < seq_len; ++i) pad[i] = ids[i] == kPadId;
    out.ids.insert(out.ids.end(), ids.begin(), ids.end());
    out.blocks.emplace_back(std::move(pad));
    out.labels.push_back(rows[idx].label);
  }
  return out;
}

template <typename T>
Var<T> classify(Graph<T>& g, const EncodedRows& rows, const ModelConfig& config, const ForwardContext& ctx) {
  const std::size_t s = config.max_seq_len;
  Var<T> x = embed(g, rows.ids, s, config, ctx);
  Var<T> h = encoder_forward(g, x, std::span<const KeyBlockVector>(rows.blocks), config, ctx);
  std::vector<std::int32_t> cls(rows.blocks.size());
  for (std::size_t b = 0; b < cls.size(); ++b) cls[b] = static_cast<std::int32_t>(b * s);
  Var<T> logits = ops::matmul(ops::gather_rows(h, cls), g.param("classifier.w"));
  return ops::add_bias(logits, g.param("classifier.b"));
}

template <typename T>
std::size_t argmax_row(const Tensor<T>& t, std::size_t r) {
  const std::size_t c = t.cols();
  const T* row = t.data() + r * c;
  std::size_t best = 0;
  for (std::size_t j = 1; j < c; ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

template <typename T>
double accuracy(const ParamStore<T>& params, std::span<const LabeledLine> rows, const Vocab& vocab,
                const ModelConfig& config, std::size_t batch_size) {
  std::size_t correct = 0;
  for (std::size_t start = 0; start < rows.size(); start += batch_size) {
    std::vector<std::size_t> order(std::min(batch_size, rows.size() - start));
    std::iota(order.begin(), order.end(), start);
    const auto enc = encode_rows(rows, order, vocab, config.max_seq_len);
    Graph<T> g(params);
    const Tensor<T>& logits = classify(g, enc, config, {}).value();
    for (std::size_t b = 0; b < order.size(); ++b) {
      correct += argmax_row(logits, b) == static_cast<std::size_t>(enc.labels[b]) ? 1 : 0;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

ModelConfig without_dropout(ModelConfig config) {
  config.hidden_dropout = 0.0;
  config.attention_dropout = 0.0;
  return config;
}

}  // namespace

template <typename T>
FinetuneResult<T> finetune_classify(const Checkpoint<T>& encoder_ckpt, const FinetuneTask& task, std::uint64_t seed) {
  task.validate();
  if (has_pretraining_params(encoder_ckpt) || encoder_ckpt.config.model.decoder_layers > 0) {
    throw std::invalid_argument(
        "finetune: checkpoint still carries decoder or MLM-head parameters; export the encoder first");
  }
  if (encoder_ckpt.vocab.empty()) throw std::invalid_argument("finetune: checkpoint has no vocabulary");
  const ModelConfig& model = encoder_ckpt.config.model;
  for (const auto& spec : param_layout(model, false)) {
    if (!encoder_ckpt.params.contains(spec.name)) {
      throw std::invalid_argument("finetune: checkpoint lacks encoder parameter '" + spec.name + "'");
    }
  }
  const Vocab vocab(encoder_ckpt.vocab);

  FinetuneResult<T> result;
  result.params = encoder_ckpt.params;
  {
    Rng init(seed, "finetune-init");
    Tensor<T> w({model.hidden, task.labels});
    for (auto& v : w.storage()) v = static_cast<T>(init.truncated_normal(encoder_ckpt.config.train.init_std));
    result.params.insert("classifier.w", std::move(w));
    result.params.insert("classifier.b", Tensor<T>({task.labels}));
  }

  const std::size_t batches = (task.train.size() + task.batch_size - 1) / task.batch_size;
  TrainConfig schedule = encoder_ckpt.config.train;
  schedule.steps = task.epochs * batches;
  schedule.learning_rate = task.learning_rate;
  schedule.warmup_frac = task.warmup_frac;
  AdamHyper hyper = AdamHyper::from(encoder_ckpt.config.train);
  hyper.weight_decay = 0.0;
  AdamState<T> adam = AdamState<T>::zeros_like(result.params);

  Rng order_rng(seed, "finetune-order");
  Rng dropout_rng(seed, "finetune-dropout");
  ForwardContext ctx;
  if (model.hidden_dropout > 0.0 || model.attention_dropout > 0.0) ctx.rng = &dropout_rng;

  std::vector<std::size_t> order(task.train.size());
  std::size_t update = 0;
  for (std::size_t epoch = 0; epoch < task.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    order_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t start = b * task.batch_size;
      const std::size_t n = std::min(task.batch_size, order.size() - start);
      const auto enc = encode_rows(task.train, std::span<const std::size_t>(order).subspan(start, n), vocab,
                                   model.max_seq_len);
      Graph<T> g(result.params);
      Var<T> logits = classify(g, enc, model, ctx);
      Var<T> loss = ops::cross_entropy_masked(logits, enc.labels, std::vector<bool>(n, true));
      if (update == 0) result.graph_signature = g.signature();
      const T value = loss.value().item();
      if (!std::isfinite(value)) throw NonFiniteLoss("finetune: non-finite loss at update " + std::to_string(update + 1));
      loss_sum += static_cast<double>(value);
      const auto grads = g.backward(loss);
      adam_step(result.params, adam, grads, hyper, learning_rate_at(schedule, ++update));
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(batches));
  }

  const ModelConfig eval_model = without_dropout(model);
  result.train_accuracy = accuracy(result.params, task.train, vocab, eval_model, task.batch_size);
  result.dev_accuracy = accuracy(result.params, task.dev, vocab, eval_model, task.batch_size);
  return result;
}

template <typename T>
ClozeResult evaluate_cloze(const Checkpoint<T>& ckpt, std::span<const std::string> lines, std::uint64_t seed) {
  if (lines.empty()) throw std::invalid_argument("evaluate_cloze: empty held-out set");
  if (ckpt.vocab.empty()) throw std::invalid_argument("evaluate_cloze: checkpoint has no vocabulary");
  const Vocab vocab(ckpt.vocab);
  const ModelConfig model = without_dropout(ckpt.config.model);
  const MaskingPolicy policy = MaskingPolicy::from(ckpt.config.train);
  const bool full = ckpt.params.contains("mlm_head.bias");
  const std::size_t batch_size = ckpt.config.train.batch_size;

  RngStreams rngs(seed);
  std::vector<MaskedSequence> sequences;
  for (const auto& line : lines) {
    const auto ids = encode_line(line, vocab, model.max_seq_len);
    if (auto seq = apply_mlm_masking(ids, vocab.size(), policy, rngs["masking"])) sequences.push_back(std::move(*seq));
  }
  if (sequences.empty()) throw std::invalid_argument("evaluate_cloze: no held-out line has a maskable token");

  ClozeResult result;
  for (std::size_t start = 0; start < sequences.size(); start += batch_size) {
    MaskedBatch batch;
    for (std::size_t i = start; i < std::min(sequences.size(), start + batch_size); ++i) batch.append(sequences[i]);
    Graph<T> g(ckpt.params);
    Var<T> logits;
    if (full) {
      PretrainOptions options;
      options.mix_override = 1.0;
      logits = pretrain_forward_loss(g, batch, model, rngs, options).logits;
    } else {
      const auto blocks = batch.base_key_blocks();
      Var<T> x = embed(g, batch.input_ids, batch.seq_len, model);
      Var<T> h = encoder_forward(g, x, std::span<const KeyBlockVector>(blocks), model);
      logits = ops::matmul(ops::gather_rows(h, batch.masked_indices()), ops::transpose(g.param("embeddings.token")));
    }
    const auto labels = batch.masked_labels();
    for (std::size_t r = 0; r < labels.size(); ++r) {
      result.correct += argmax_row(logits.value(), r) == static_cast<std::size_t>(labels[r]) ? 1 : 0;
    }
    result.masked += labels.size();
  }
  return result;
}

template FinetuneResult<float> finetune_classify<float>(const Checkpoint<float>&, const FinetuneTask&, std::uint64_t);
template FinetuneResult<double> finetune_classify<double>(const Checkpoint<double>&, const FinetuneTask&,
                                                          std::uint64_t);
template ClozeResult evaluate_cloze<float>(const Checkpoint<float>&, std::span<const std::string>, std::uint64_t);
template ClozeResult evaluate_cloze<double>(const Checkpoint<double>&, std::span<const std::string>, std::uint64_t);

}  // namespace bpdec
