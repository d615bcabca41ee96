// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace bpdec {

const char* to_string(LnPlacement placement) { return placement == LnPlacement::pre ? "pre" : "post"; }
const char* to_string(Precision precision) { return precision == Precision::f64 ? "f64" : "f32"; }

void GuaSchedule::validate(std::size_t decoder_layers) const {
  std::size_t prev_layer = 0;
  double prev_rate = 0.0;
  for (const auto& e : entries) {
    if (e.layer < 1 || e.layer > decoder_layers) {
      throw ConfigError("gua_layers", 0,
                        "layer " + std::to_string(e.layer) + " outside [1, " + std::to_string(decoder_layers) + "]");
    }
    if (e.layer <= prev_layer) throw ConfigError("gua_layers", 0, "layer indices must be strictly increasing");
    if (!(e.rate >= 0.0 && e.rate <= 1.0)) throw ConfigError("gua_rates", 0, "rates must lie in [0, 1]");
    if (e.rate < prev_rate) throw ConfigError("gua_rates", 0, "rates must be non-decreasing");
    prev_layer = e.layer;
    prev_rate = e.rate;
  }
  if (!entries.empty() && entries.back().rate != 1.0) {
    throw ConfigError("gua_rates", 0, "final unmasking rate must be 1.0");
  }
}

void ModelConfig::validate() const {
  if (hidden < 2) throw ConfigError("hidden", 0, "must be at least 2");
  if (heads < 1) throw ConfigError("heads", 0, "must be at least 1");
  if (head_size < 1) throw ConfigError("head_size", 0, "must be at least 1");
  if (heads * head_size != hidden) {
    throw ConfigError("hidden", 0,
                      "heads x head_size = " + std::to_string(heads * head_size) + " differs from hidden = " +
                          std::to_string(hidden));
  }
  if (ffn < 1) throw ConfigError("ffn", 0, "must be at least 1");
  if (vocab_size < 6) throw ConfigError("vocab_size", 0, "must exceed the 5 reserved ids");
  if (max_seq_len < 3) throw ConfigError("max_seq_len", 0, "must be at least 3");
  gua.validate(decoder_layers);
  if (!(mix_decoder_prob >= 0.0 && mix_decoder_prob <= 1.0)) throw ConfigError("mix_decoder_prob", 0, "must lie in [0, 1]");
  if (!(hidden_dropout >= 0.0 && hidden_dropout < 1.0)) throw ConfigError("hidden_dropout", 0, "must lie in [0, 1)");
  if (!(attention_dropout >= 0.0 && attention_dropout < 1.0)) {
    throw ConfigError("attention_dropout", 0, "must lie in [0, 1)");
  }
  if (!(layer_norm_eps > 0.0)) throw ConfigError("layer_norm_eps", 0, "must be positive");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size", 0, "must be at least 1");
  if (steps < 1) throw ConfigError("steps", 0, "must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", 0, "must be positive");
  if (!(warmup_frac >= 0.0 && warmup_frac <= 1.0)) throw ConfigError("warmup_frac", 0, "must lie in [0, 1]");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1", 0, "must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2", 0, "must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps", 0, "must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay", 0, "must be non-negative");
  if (!(init_std > 0.0)) throw ConfigError("init_std", 0, "must be positive");
  if (!(select_rate > 0.0 && select_rate <= 1.0)) throw ConfigError("select_rate", 0, "must lie in (0, 1]");
  for (auto [key, v] : {std::pair{"mask_frac", mask_frac}, {"keep_frac", keep_frac}, {"random_frac", random_frac}}) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(key, 0, "must lie in [0, 1]");
  }
  if (std::abs(mask_frac + keep_frac + random_frac - 1.0) > 1e-9) {
    throw ConfigError("random_frac", 0, "mask_frac + keep_frac + random_frac must equal 1");
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  if (trim(value).empty()) return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::size_t to_count(const std::string& key, std::size_t line, const std::string& text) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(key, line, "expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

double to_real(const std::string& key, std::size_t line, const std::string& text) {
  double v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError(key, line, "expected a finite real number, got '" + text + "'");
  }
  return v;
}

std::string real_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(RunConfig&, const std::string& value, std::size_t line)>;

Setter count_field(std::size_t ModelConfig::*field, const char* key) {
  return [field, key](RunConfig& c, const std::string& v, std::size_t line) { c.model.*field = to_count(key, line, v); };
}
Setter count_field(std::size_t TrainConfig::*field, const char* key) {
  return [field, key](RunConfig& c, const std::string& v, std::size_t line) { c.train.*field = to_count(key, line, v); };
}
Setter real_field(double ModelConfig::*field, const char* key) {
  return [field, key](RunConfig& c, const std::string& v, std::size_t line) { c.model.*field = to_real(key, line, v); };
}
Setter real_field(double TrainConfig::*field, const char* key) {
  return [field, key](RunConfig& c, const std::string& v, std::size_t line) { c.train.*field = to_real(key, line, v); };
}

struct Pending {
  std::vector<std::size_t> gua_layers;
  std::vector<double> gua_rates;
};

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> kSetters = {
      {"encoder_layers", count_field(&ModelConfig::encoder_layers, "encoder_layers")},
      {"hidden", count_field(&ModelConfig::hidden, "hidden")},
      {"ffn", count_field(&ModelConfig::ffn, "ffn")},
      {"heads", count_field(&ModelConfig::heads, "heads")},
      {"head_size", count_field(&ModelConfig::head_size, "head_size")},
      {"vocab_size", count_field(&ModelConfig::vocab_size, "vocab_size")},
      {"max_seq_len", count_field(&ModelConfig::max_seq_len, "max_seq_len")},
      {"decoder_layers", count_field(&ModelConfig::decoder_layers, "decoder_layers")},
      {"ln_placement",
       [](RunConfig& c, const std::string& v, std::size_t line) {
         if (v == "post") c.model.ln_placement = LnPlacement::post;
         else if (v == "pre") c.model.ln_placement = LnPlacement::pre;
         else throw ConfigError("ln_placement", line, "expected 'post' or 'pre', got '" + v + "'");
       }},
      {"mix_decoder_prob", real_field(&ModelConfig::mix_decoder_prob, "mix_decoder_prob")},
      {"hidden_dropout", real_field(&ModelConfig::hidden_dropout, "hidden_dropout")},
      {"attention_dropout", real_field(&ModelConfig::attention_dropout, "attention_dropout")},
      {"layer_norm_eps", real_field(&ModelConfig::layer_norm_eps, "layer_norm_eps")},
      {"precision",
       [](RunConfig& c, const std::string& v, std::size_t line) {
         if (v == "f32") c.train.precision = Precision::f32;
         else if (v == "f64") c.train.precision = Precision::f64;
         else throw ConfigError("precision", line, "expected 'f32' or 'f64', got '" + v + "'");
       }},
      {"batch_size", count_field(&TrainConfig::batch_size, "batch_size")},
      {"steps", count_field(&TrainConfig::steps, "steps")},
      {"learning_rate", real_field(&TrainConfig::learning_rate, "learning_rate")},
      {"warmup_frac", real_field(&TrainConfig::warmup_frac, "warmup_frac")},
      {"beta1", real_field(&TrainConfig::beta1, "beta1")},
      {"beta2", real_field(&TrainConfig::beta2, "beta2")},
      {"adam_eps", real_field(&TrainConfig::adam_eps, "adam_eps")},
      {"weight_decay", real_field(&TrainConfig::weight_decay, "weight_decay")},
      {"init_std", real_field(&TrainConfig::init_std, "init_std")},
      {"checkpoint_every", count_field(&TrainConfig::checkpoint_every, "checkpoint_every")},
      {"select_rate", real_field(&TrainConfig::select_rate, "select_rate")},
      {"mask_frac", real_field(&TrainConfig::mask_frac, "mask_frac")},
      {"keep_frac", real_field(&TrainConfig::keep_frac, "keep_frac")},
      {"random_frac", real_field(&TrainConfig::random_frac, "random_frac")},
      // List keys are collected first and combined after all lines are read.
      {"gua_layers", {}},
      {"gua_rates", {}},
  };
  return kSetters;
}

const std::vector<std::string>& required_keys() {
  static const std::vector<std::string> kRequired = {"encoder_layers", "hidden",     "ffn",        "heads",
                                                     "head_size",      "vocab_size", "max_seq_len"};
  return kRequired;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::map<std::string, std::size_t> seen;
  Pending pending;

  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(trim(line), line_no, "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = setters();
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, line_no, "unknown key");
    if (!seen.emplace(key, line_no).second) throw ConfigError(key, line_no, "repeated key");
    if (key == "gua_layers") {
      for (const auto& item : split_list(value)) pending.gua_layers.push_back(to_count(key, line_no, item));
    } else if (key == "gua_rates") {
      for (const auto& item : split_list(value)) pending.gua_rates.push_back(to_real(key, line_no, item));
    } else {
      if (value.empty()) throw ConfigError(key, line_no, "missing value");
      it->second(config, value, line_no);
    }
  }

  for (const auto& key : required_keys()) {
    if (!seen.count(key)) throw ConfigError(key, 0, "required key missing");
  }
  if (pending.gua_layers.size() != pending.gua_rates.size()) {
    const std::string key = seen.count("gua_rates") ? "gua_rates" : "gua_layers";
    throw ConfigError(key, seen.count(key) ? seen[key] : 0, "gua_layers and gua_rates must have equal length");
  }
  for (std::size_t i = 0; i < pending.gua_layers.size(); ++i) {
    config.model.gua.entries.push_back({pending.gua_layers[i], pending.gua_rates[i]});
  }

  try {
    config.model.validate();
    config.train.validate();
  } catch (const ConfigError& e) {
    auto it = seen.find(e.key());
    const std::string what = e.what();
    const std::string prefix = "key '" + e.key() + "': ";
    throw ConfigError(e.key(), it == seen.end() ? 0 : it->second,
                      what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what);
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const RunConfig& config) {
  const auto& m = config.model;
  const auto& t = config.train;
  std::ostringstream os;
  os << "encoder_layers = " << m.encoder_layers << '\n'
     << "hidden = " << m.hidden << '\n'
     << "ffn = " << m.ffn << '\n'
     << "heads = " << m.heads << '\n'
     << "head_size = " << m.head_size << '\n'
     << "vocab_size = " << m.vocab_size << '\n'
     << "max_seq_len = " << m.max_seq_len << '\n'
     << "ln_placement = " << to_string(m.ln_placement) << '\n'
     << "decoder_layers = " << m.decoder_layers << '\n';
  os << "gua_layers = ";
  for (std::size_t i = 0; i < m.gua.entries.size(); ++i) os << (i ? "," : "") << m.gua.entries[i].layer;
  os << "\ngua_rates = ";
  for (std::size_t i = 0; i < m.gua.entries.size(); ++i) os << (i ? "," : "") << real_text(m.gua.entries[i].rate);
  os << '\n'
     << "mix_decoder_prob = " << real_text(m.mix_decoder_prob) << '\n'
     << "hidden_dropout = " << real_text(m.hidden_dropout) << '\n'
     << "attention_dropout = " << real_text(m.attention_dropout) << '\n'
     << "layer_norm_eps = " << real_text(m.layer_norm_eps) << '\n'
     << "precision = " << to_string(t.precision) << '\n'
     << "batch_size = " << t.batch_size << '\n'
     << "steps = " << t.steps << '\n'
     << "learning_rate = " << real_text(t.learning_rate) << '\n'
     << "warmup_frac = " << real_text(t.warmup_frac) << '\n'
     << "beta1 = " << real_text(t.beta1) << '\n'
     << "beta2 = " << real_text(t.beta2) << '\n'
     << "adam_eps = " << real_text(t.adam_eps) << '\n'
     << "weight_decay = " << real_text(t.weight_decay) << '\n'
     << "init_std = " << real_text(t.init_std) << '\n'
     << "checkpoint_every = " << t.checkpoint_every << '\n'
     << "select_rate = " << real_text(t.select_rate) << '\n'
     << "mask_frac = " << real_text(t.mask_frac) << '\n'
     << "keep_frac = " << real_text(t.keep_frac) << '\n'
     << "random_frac = " << real_text(t.random_frac) << '\n';
  return os.str();
}

}  // namespace bpdec
