// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <tuple>

#include "bpdec/cli.hpp"
#include "bpdec/config.hpp"
#include "bpdec/flops.hpp"
#include "bpdec/gua.hpp"
#include "bpdec/masking.hpp"
#include "bpdec/synth.hpp"
#include "bpdec/vocab.hpp"

namespace py = pybind11;
using namespace bpdec;

namespace {

FlopsPhase parse_phase(const std::string& name) {
  for (FlopsPhase p : {FlopsPhase::pretrain, FlopsPhase::finetune, FlopsPhase::finetune_decoder_retained,
                       FlopsPhase::inference})
    if (name == to_string(p)) return p;
  throw py::value_error("unknown phase: " + name);
}

py::dict config_dict(const RunConfig& config) {
  py::dict d;
  std::istringstream in(to_text(config));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    d[py::str(line.substr(0, eq))] = line.substr(eq + 3);
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_bpdec, m) {
  m.doc() = "bpdec bindings";
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "load_config", [](const std::string& path) { return config_dict(load_config(path)); }, py::arg("path"),
      "Validated config as a key -> value-text dict.");

  m.def(
      "flops",
      [](const std::string& config_path, const std::string& phase, std::size_t seq_len) {
        const ModelConfig model = load_config(config_path).model;
        const FlopsReport r = flops_estimate(model, parse_phase(phase), seq_len ? seq_len : model.max_seq_len);
        py::dict d;
        d["layers"] = r.layers;
        d["layer_total"] = r.layer.total();
        d["head"] = r.head;
        d["forward"] = r.forward;
        d["backward"] = r.backward;
        d["total"] = r.total;
        return d;
      },
      py::arg("config"), py::arg("phase") = "pretrain", py::arg("seq_len") = 0);

  m.def("unmask_count", &unmask_count, py::arg("rate"), py::arg("m"));

  m.def(
      "gua_plan",
      [](const std::vector<bool>& masked, const std::vector<std::pair<std::size_t, double>>& schedule,
         std::size_t decoder_layers, std::uint64_t seed) {
        GuaSchedule s;
        for (const auto& [layer, rate] : schedule) s.entries.push_back({layer, rate});
        s.validate(decoder_layers);
        Rng rng(seed, "gua");
        return plan_unmasking(masked, s, decoder_layers, rng).layers;
      },
      py::arg("masked"), py::arg("schedule"), py::arg("decoder_layers"), py::arg("seed") = 0);

  m.def(
      "markov_corpus",
      [](std::size_t lines, std::uint64_t seed) {
        MarkovCorpusSpec spec;
        spec.lines = lines;
        spec.seed = seed;
        return generate_markov_corpus(spec);
      },
      py::arg("lines"), py::arg("seed") = MarkovCorpusSpec{}.seed);

  m.def(
      "order_task",
      [](std::size_t examples, std::uint64_t seed) {
        OrderTaskSpec spec;
        spec.examples = examples;
        spec.seed = seed;
        std::vector<std::tuple<int, std::string>> out;
        for (const auto& row : generate_order_task(spec)) out.emplace_back(row.label, row.text);
        return out;
      },
      py::arg("examples"), py::arg("seed") = OrderTaskSpec{}.seed);

  m.def(
      "mask_stats",
      [](const std::vector<std::string>& lines, std::size_t seq_len, std::uint64_t seed, std::size_t tokens) {
        const Vocab vocab = build_vocab(lines, 1024);
        const MaskStats s = mask_stats(lines, vocab, seq_len, MaskingPolicy{}, seed, tokens);
        py::dict d;
        d["maskable"] = s.maskable;
        d["select_rate"] = s.select_rate();
        d["mask_rate"] = s.mask_rate();
        d["keep_rate"] = s.keep_rate();
        d["random_rate"] = s.random_rate();
        return d;
      },
      py::arg("lines"), py::arg("seq_len") = 32, py::arg("seed") = 0, py::arg("tokens") = 100000);

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return std::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a bpdec subcommand; returns (exit code, stdout, stderr).");
}
