// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <ostream>

#include "bpdec/checkpoint.hpp"
#include "bpdec/config.hpp"
#include "bpdec/finetune.hpp"
#include "bpdec/flops.hpp"
#include "bpdec/heatmap.hpp"
#include "bpdec/masking.hpp"
#include "bpdec/model_gradcheck.hpp"
#include "bpdec/synth.hpp"
#include "bpdec/trainer.hpp"
#include "bpdec/vocab.hpp"

namespace bpdec {

namespace {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel log_level() {
  const char* env = std::getenv("BPDEC_LOG_LEVEL");
  if (env == nullptr) return LogLevel::info;
  const std::string v = env;
  if (v == "error") return LogLevel::error;
  if (v == "warn") return LogLevel::warn;
  if (v == "debug") return LogLevel::debug;
  return LogLevel::info;
}

template <typename F>
int with_precision(Precision precision, F&& f) {
  return precision == Precision::f64 ? f.template operator()<double>() : f.template operator()<float>();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (const auto& l : lines) out << l << "\n";
}

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
};

struct PretrainArgs {
  std::string corpus;
  std::size_t steps = 0;
  std::string objective = "bpdec";
  std::string resume;
  std::size_t stop_at = 0;
};

int cmd_pretrain(const Common& c, const PretrainArgs& a, std::ostream& out, std::ostream& err) {
  PretrainJob job;
  job.seed = c.seed;
  job.out_dir = c.out;
  job.corpus = read_lines(a.corpus);
  job.objective = a.objective == "baseline" ? Objective::baseline : Objective::bpdec;
  job.stop_at = a.stop_at;
  Precision precision;
  if (!a.resume.empty()) {
    job.resume_from = a.resume;
    precision = read_checkpoint_config(a.resume).train.precision;
  } else {
    if (c.config.empty()) throw std::invalid_argument("pretrain: --config is required unless --resume is given");
    job.config = load_config(c.config);
    if (a.steps > 0) job.config.train.steps = a.steps;
    precision = job.config.train.precision;
  }
  const LogLevel level = log_level();
  job.on_step = [&](const StepMetrics& m) {
    if (level >= LogLevel::debug || (level >= LogLevel::info && m.step % 100 == 0)) err << m.to_line() << "\n";
  };
  return with_precision(precision, [&]<typename T>() {
    const auto result = pretrain<T>(job);
    out << "steps: " << result.checkpoint.progress.step << "\n";
    if (!result.metrics.empty()) out << "final_loss: " << result.metrics.back().loss << "\n";
    out << "parameters: " << result.checkpoint.params.scalar_count() << "\n";
    out << "checkpoint: " << (std::filesystem::path(c.out) / "final.ckpt").string() << "\n";
    return kExitOk;
  });
}

int cmd_export(const Common& c, const std::string& ckpt_path, std::ostream& out) {
  const RunConfig config = read_checkpoint_config(ckpt_path);
  return with_precision(config.train.precision, [&]<typename T>() {
    const auto exported = export_encoder(load_checkpoint<T>(ckpt_path));
    std::filesystem::create_directories(c.out);
    const auto path = std::filesystem::path(c.out) / "encoder.ckpt";
    save_checkpoint(exported, path);
    out << "checkpoint: " << path.string() << "\n";
    out << "parameters: " << exported.params.scalar_count() << "\n";
    out << "tensors: " << exported.params.size() << "\n";
    return kExitOk;
  });
}

int cmd_eval_cloze(const Common& c, const std::string& ckpt_path, const std::string& corpus, std::ostream& out) {
  const RunConfig config = read_checkpoint_config(ckpt_path);
  const auto lines = read_lines(corpus);
  return with_precision(config.train.precision, [&]<typename T>() {
    const auto ckpt = load_checkpoint<T>(ckpt_path);
    const ClozeResult r = evaluate_cloze(ckpt, lines, c.seed);
    out << "masked: " << r.masked << "\n";
    out << "correct: " << r.correct << "\n";
    out << "accuracy: " << r.accuracy() << "\n";
    out << "chance: " << 1.0 / static_cast<double>(ckpt.vocab.size()) << "\n";
    return kExitOk;
  });
}

struct FinetuneArgs {
  std::string checkpoint;
  std::string data;
  std::size_t epochs = 5;
  double lr = 1e-3;
  std::size_t batch_size = 16;
};

int cmd_finetune(const Common& c, const FinetuneArgs& a, std::ostream& out) {
  const RunConfig config = read_checkpoint_config(a.checkpoint);
  FinetuneTask task = load_classification_task(a.data);
  task.epochs = a.epochs;
  task.learning_rate = a.lr;
  task.batch_size = a.batch_size;
  return with_precision(config.train.precision, [&]<typename T>() {
    const auto r = finetune_classify(load_checkpoint<T>(a.checkpoint), task, c.seed);
    std::string text = "train_examples: " + std::to_string(task.train.size()) + "\n" +
                       "dev_examples: " + std::to_string(task.dev.size()) + "\n";
    for (std::size_t e = 0; e < r.epoch_losses.size(); ++e) {
      text += "epoch_" + std::to_string(e + 1) + "_loss: " + std::to_string(r.epoch_losses[e]) + "\n";
    }
    text += "train_accuracy: " + std::to_string(r.train_accuracy) + "\n";
    text += "dev_accuracy: " + std::to_string(r.dev_accuracy) + "\n";
    out << text;
    if (!c.out.empty()) {
      std::filesystem::create_directories(c.out);
      write_text(std::filesystem::path(c.out) / "finetune.txt", text);
      write_text(std::filesystem::path(c.out) / "graph_signature.txt", r.graph_signature);
    }
    return kExitOk;
  });
}

int cmd_flops(const Common& c, const std::string& baseline, std::size_t seq_len, std::ostream& out) {
  const ModelConfig model = load_config(c.config).model;
  const std::size_t s = seq_len > 0 ? seq_len : model.max_seq_len;
  if (baseline.empty()) {
    out << flops_report_text(model, s);
  } else {
    const ModelConfig base = load_config(baseline).model;
    out << flops_report_text(model, s, &base);
  }
  return kExitOk;
}

int cmd_gradcheck(const Common& c, double step, double threshold, double floor, std::size_t batch, std::ostream& out) {
  RunConfig config = load_config(c.config);
  GradcheckOptions options;
  options.step = step;
  options.floor = floor;
  const auto report = model_gradcheck(config, c.seed, options, batch, threshold);
  out << report.to_text();
  return report.passed() ? kExitOk : kExitFailure;
}

int cmd_mask_stats(const Common& c, const std::string& corpus, std::size_t tokens, std::ostream& out) {
  RunConfig config;
  config.model.vocab_size = 1024;
  config.model.max_seq_len = 64;
  if (!c.config.empty()) config = load_config(c.config);
  const auto lines = read_lines(corpus);
  const Vocab vocab = build_vocab(lines, config.model.vocab_size);
  const MaskingPolicy policy = MaskingPolicy::from(config.train);
  const MaskStats stats = mask_stats(lines, vocab, config.model.max_seq_len, policy, c.seed, tokens);
  out << mask_stats_report(stats, policy);
  return kExitOk;
}

struct AttnArgs {
  std::string checkpoint;
  std::string line;
  std::string stack = "encoder";
  std::size_t layer = 0;
  int head = -1;
  bool no_gua = false;
};

int cmd_attn_dump(const Common& c, const AttnArgs& a, std::ostream& out) {
  const RunConfig config = read_checkpoint_config(a.checkpoint);
  HeatmapRequest request;
  request.line = a.line;
  request.stack = a.stack == "decoder" ? HeatmapStack::decoder : HeatmapStack::encoder;
  request.layer = a.layer;
  if (a.head >= 0) request.head = static_cast<std::size_t>(a.head);
  request.apply_gua = !a.no_gua;
  request.seed = c.seed;
  return with_precision(config.train.precision, [&]<typename T>() {
    const HeatmapDump dump = attn_heatmap(load_checkpoint<T>(a.checkpoint), request);
    const std::string csv = dump.to_csv();
    if (c.out.empty()) {
      out << csv;
    } else {
      std::filesystem::create_directories(c.out);
      const auto path = std::filesystem::path(c.out) /
                        ("attn_" + a.stack + "_l" + std::to_string(dump.layer) +
                         (dump.head ? "_h" + std::to_string(*dump.head) : std::string("_avg")) + ".csv");
      write_text(path, csv);
      out << "heatmap: " << path.string() << "\n";
    }
    return kExitOk;
  });
}

int cmd_synth(const Common& c, const std::string& kind, std::size_t lines, std::ostream& out) {
  std::filesystem::create_directories(c.out);
  const std::filesystem::path dir = c.out;
  if (kind == "markov") {
    MarkovCorpusSpec spec;
    spec.seed = c.seed;
    if (lines > 0) spec.lines = lines;
    const auto split = generate_markov_split(spec, std::max<std::size_t>(1, spec.lines / 25));
    write_lines(dir / "corpus.txt", split.train);
    write_lines(dir / "heldout.txt", split.heldout);
    out << "corpus: " << (dir / "corpus.txt").string() << "\n";
    out << "heldout: " << (dir / "heldout.txt").string() << "\n";
  } else {
    OrderTaskSpec spec;
    spec.seed = c.seed;
    if (lines > 0) spec.examples = lines;
    write_lines(dir / "task.tsv", to_tsv(generate_order_task(spec)));
    out << "task: " << (dir / "task.tsv").string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"BPDec masked-language-model pretraining lab", "bpdec"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Common common;
  auto add_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--config", common.config, "Config file (key = value lines)")->check(CLI::ExistingFile);
    if (required) opt->required();
  };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", common.seed, "Random seed")->capture_default_str(); };
  auto add_out = [&](CLI::App* sub, bool required, const std::string& what) {
    auto* opt = sub->add_option("--out", common.out, what);
    if (required) opt->required();
  };

  PretrainArgs pre;
  auto* pretrain_cmd = app.add_subcommand("pretrain", "Pretrain a BPDec or control BERT model");
  add_config(pretrain_cmd, false);
  add_seed(pretrain_cmd);
  add_out(pretrain_cmd, true, "Output directory for metrics, vocabulary and checkpoints");
  pretrain_cmd->add_option("--corpus", pre.corpus, "Training corpus, one sequence per line")
      ->required()
      ->check(CLI::ExistingFile);
  pretrain_cmd->add_option("--steps", pre.steps, "Override train steps");
  pretrain_cmd->add_option("--objective", pre.objective, "bpdec or baseline")
      ->check(CLI::IsMember({"bpdec", "baseline"}))
      ->capture_default_str();
  pretrain_cmd->add_option("--resume", pre.resume, "Continue from this checkpoint")->check(CLI::ExistingFile);
  pretrain_cmd->add_option("--stop-at", pre.stop_at, "Stop after this step");

  FinetuneArgs ft;
  auto* finetune_cmd = app.add_subcommand("finetune", "Train a [CLS] classifier on an exported encoder");
  add_seed(finetune_cmd);
  add_out(finetune_cmd, false, "Directory for the finetune report");
  finetune_cmd->add_option("--checkpoint", ft.checkpoint, "Encoder-only checkpoint")->required()->check(CLI::ExistingFile);
  finetune_cmd->add_option("--data", ft.data, "label<TAB>text file")->required()->check(CLI::ExistingFile);
  finetune_cmd->add_option("--epochs", ft.epochs, "Epochs")->capture_default_str();
  finetune_cmd->add_option("--lr", ft.lr, "Peak learning rate")->capture_default_str();
  finetune_cmd->add_option("--batch-size", ft.batch_size, "Batch size")->capture_default_str();

  std::string export_in;
  auto* export_cmd = app.add_subcommand("export-encoder", "Drop decoder and MLM-head parameters");
  add_out(export_cmd, true, "Directory receiving encoder.ckpt");
  export_cmd->add_option("--checkpoint", export_in, "Pretraining checkpoint")->required()->check(CLI::ExistingFile);

  std::string cloze_ckpt, cloze_corpus;
  auto* cloze_cmd = app.add_subcommand("eval-cloze", "Masked-token top-1 accuracy on held-out text");
  add_seed(cloze_cmd);
  cloze_cmd->add_option("--checkpoint", cloze_ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  cloze_cmd->add_option("--corpus", cloze_corpus, "Held-out lines")->required()->check(CLI::ExistingFile);

  std::string flops_baseline;
  std::size_t flops_seq = 0;
  auto* flops_cmd = app.add_subcommand("flops", "Analytic FLOP report");
  add_config(flops_cmd, true);
  flops_cmd->add_option("--baseline", flops_baseline, "Baseline config for ratios")->check(CLI::ExistingFile);
  flops_cmd->add_option("--seq-len", flops_seq, "Sequence length (default: max_seq_len)");

  double gc_step = 1e-5, gc_threshold = 1e-4, gc_floor = 1e-5;
  std::size_t gc_batch = 2;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the full model at 64-bit");
  add_config(grad_cmd, true);
  add_seed(grad_cmd);
  grad_cmd->add_option("--step", gc_step, "Central-difference step")->capture_default_str();
  grad_cmd->add_option("--threshold", gc_threshold, "Pass threshold on max relative error")->capture_default_str();
  grad_cmd->add_option("--floor", gc_floor, "Relative-error denominator floor")->capture_default_str();
  grad_cmd->add_option("--batch", gc_batch, "Sequences in the probe batch")->capture_default_str();

  std::string ms_corpus;
  std::size_t ms_tokens = 100000;
  auto* mask_cmd = app.add_subcommand("mask-stats", "Empirical masking rates");
  add_config(mask_cmd, false);
  add_seed(mask_cmd);
  mask_cmd->add_option("--corpus", ms_corpus, "Corpus lines")->required()->check(CLI::ExistingFile);
  mask_cmd->add_option("--tokens", ms_tokens, "Maskable tokens to sample")->capture_default_str();

  AttnArgs attn;
  auto* attn_cmd = app.add_subcommand("attn-dump", "Attention heatmap CSV for one input line");
  add_seed(attn_cmd);
  add_out(attn_cmd, false, "Directory for the CSV (default: standard output)");
  attn_cmd->add_option("--checkpoint", attn.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  attn_cmd->add_option("--line", attn.line, "Input text")->required();
  attn_cmd->add_option("--stack", attn.stack, "encoder or decoder")
      ->check(CLI::IsMember({"encoder", "decoder"}))
      ->capture_default_str();
  attn_cmd->add_option("--layer", attn.layer, "1-based layer (default: last)");
  attn_cmd->add_option("--head", attn.head, "0-based head (default: average over heads)");
  attn_cmd->add_flag("--no-gua", attn.no_gua, "Keep every masked key blocked in the decoder");

  std::string synth_kind = "markov";
  std::size_t synth_lines = 0;
  auto* synth_cmd = app.add_subcommand("synth-data", "Write the synthetic corpus or classification task");
  add_seed(synth_cmd);
  add_out(synth_cmd, true, "Output directory");
  synth_cmd->add_option("--kind", synth_kind, "markov or order")
      ->check(CLI::IsMember({"markov", "order"}))
      ->capture_default_str();
  synth_cmd->add_option("--lines", synth_lines, "Lines (markov) or examples (order)");

  std::vector<std::string> argv_store{"bpdec"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (pretrain_cmd->parsed()) return cmd_pretrain(common, pre, out, err);
    if (finetune_cmd->parsed()) return cmd_finetune(common, ft, out);
    if (export_cmd->parsed()) return cmd_export(common, export_in, out);
    if (cloze_cmd->parsed()) return cmd_eval_cloze(common, cloze_ckpt, cloze_corpus, out);
    if (flops_cmd->parsed()) return cmd_flops(common, flops_baseline, flops_seq, out);
    if (grad_cmd->parsed()) return cmd_gradcheck(common, gc_step, gc_threshold, gc_floor, gc_batch, out);
    if (mask_cmd->parsed()) return cmd_mask_stats(common, ms_corpus, ms_tokens, out);
    if (attn_cmd->parsed()) return cmd_attn_dump(common, attn, out);
    if (synth_cmd->parsed()) return cmd_synth(common, synth_kind, synth_lines, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace bpdec
