// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace bpdec {

enum class LnPlacement { post, pre };
enum class Precision { f32, f64 };

/// One scheduled decoder layer: at `layer` (1-based) the first
/// ceil(rate · m) positions of the sequence's unmask permutation are
/// unblocked as keys.
struct GuaEntry {
  std::size_t layer = 0;
  double rate = 0.0;
  bool operator==(const GuaEntry&) const = default;
};

struct GuaSchedule {
  std::vector<GuaEntry> entries;

  /// Layer indices strictly increasing within [1, decoder_layers]; rates in
  /// [0, 1] and non-decreasing; last rate exactly 1.0 when non-empty.
  void validate(std::size_t decoder_layers) const;
  bool empty() const noexcept { return entries.empty(); }
  bool operator==(const GuaSchedule&) const = default;
};

struct ModelConfig {
  std::size_t encoder_layers = 0;
  std::size_t hidden = 0;
  std::size_t ffn = 0;
  std::size_t heads = 0;
  std::size_t head_size = 0;
  std::size_t vocab_size = 0;
  std::size_t max_seq_len = 0;
  LnPlacement ln_placement = LnPlacement::post;
  std::size_t decoder_layers = 0;
  GuaSchedule gua;
  double mix_decoder_prob = 1.0;
  double hidden_dropout = 0.0;
  double attention_dropout = 0.0;
  double layer_norm_eps = 1e-12;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct TrainConfig {
  Precision precision = Precision::f32;
  std::size_t batch_size = 8;
  std::size_t steps = 1000;
  double learning_rate = 1e-3;
  double warmup_frac = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  double init_std = 0.02;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  double select_rate = 0.15;
  double mask_frac = 0.8;
  double keep_frac = 0.1;
  double random_frac = 0.1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  bool operator==(const RunConfig&) const = default;
};

/// Rejection of a config file; carries the offending key and line
/// (line 0 when the key is missing altogether).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, std::size_t line, const std::string& what)
      : std::runtime_error(format(key, line, what)), key_(std::move(key)), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& key, std::size_t line, const std::string& what) {
    return (line ? "line " + std::to_string(line) + ": " : std::string()) + "key '" + key + "': " + what;
  }
  std::string key_;
  std::size_t line_;
};

/// Parses `key = value` text: one key per line, `#` starts a comment,
/// lists are comma-separated. Unknown or repeated keys, malformed values
/// and invariant violations throw ConfigError.
///
/// Required: encoder_layers hidden ffn heads head_size vocab_size
/// max_seq_len. Everything else has a default.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text: every key in a fixed order, reals printed with 17
/// significant digits so parse_config(to_text(c)) == c.
std::string to_text(const RunConfig& config);

const char* to_string(LnPlacement placement);
const char* to_string(Precision precision);

}  // namespace bpdec
