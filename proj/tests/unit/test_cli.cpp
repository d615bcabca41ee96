// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "bpdec/checkpoint.hpp"
#include "bpdec/cli.hpp"
#include "test_support.hpp"

using namespace bpdec;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string config_path(const char* file) {
  return (std::filesystem::path(BPDEC_SOURCE_DIR) / "configs" / file).string();
}

bool contains(const std::string& text, const std::string& what) { return text.find(what) != std::string::npos; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help and usage errors") {
    CHECK(run({"--help"}).code == kExitOk);
    for (const char* sub : {"pretrain", "finetune", "export-encoder", "eval-cloze", "flops", "gradcheck", "mask-stats",
                            "attn-dump", "synth-data"}) {
      CAPTURE(sub);
      const auto r = run({sub, "--help"});
      CHECK(r.code == kExitOk);
      CHECK(contains(r.out, "Usage"));
    }
    const auto unknown = run({"flops", "--config", config_path("tiny.cfg"), "--bogus-flag"});
    CHECK(unknown.code == kExitUsage);
    CHECK(contains(unknown.err, "--bogus-flag"));
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"no-such-command"}).code == kExitUsage);
    CHECK(run({"flops"}).code == kExitUsage);
  }

  TEST_CASE("flops prints a report") {
    const auto r = run({"flops", "--config", config_path("bpdec_large.cfg"), "--baseline", config_path("bert_large.cfg")});
    CHECK(r.code == kExitOk);
    CHECK(contains(r.out, "pretrain.total:"));
    CHECK(contains(r.out, "ratio.finetune_decoder_dropped: 1.000000"));
  }

  TEST_CASE("gradcheck on a small model") {
    testing::TempDir dir("cli-gc");
    {
      std::ofstream cfg(dir / "mini.cfg");
      cfg << "encoder_layers = 1\nhidden = 8\nffn = 16\nheads = 2\nhead_size = 4\nvocab_size = 12\n"
             "max_seq_len = 6\ndecoder_layers = 1\ngua_layers = 1\ngua_rates = 1.0\nprecision = f64\ninit_std = 0.2\n";
    }
    const auto r = run({"gradcheck", "--config", (dir / "mini.cfg").string(), "--seed", "7"});
    CHECK(r.code == kExitOk);
    CHECK(contains(r.out, "max_rel_error:"));
    CHECK(contains(r.out, "result: PASS"));
  }

  TEST_CASE("runtime failures exit with 2") {
    testing::TempDir dir("cli-fail");
    {
      std::ofstream bad(dir / "bad.cfg");
      bad << "hidden = 17\n";
    }
    const auto r = run({"flops", "--config", (dir / "bad.cfg").string()});
    CHECK(r.code == kExitFailure);
    CHECK(contains(r.err, "error:"));
  }

  TEST_CASE("end-to-end pipeline through the command line") {
    testing::TempDir dir("cli-e2e");
    const std::string d = dir.path().string();
    REQUIRE(run({"synth-data", "--kind", "markov", "--lines", "200", "--out", d}).code == kExitOk);
    REQUIRE(run({"synth-data", "--kind", "order", "--lines", "100", "--out", d}).code == kExitOk);
    {
      std::ofstream cfg(dir / "run.cfg");
      cfg << "encoder_layers = 1\nhidden = 16\nffn = 32\nheads = 2\nhead_size = 8\nvocab_size = 100\n"
             "max_seq_len = 32\ndecoder_layers = 1\ngua_layers = 1\ngua_rates = 1.0\nbatch_size = 4\nsteps = 3\n";
    }
    const auto pre = run({"pretrain", "--config", (dir / "run.cfg").string(), "--corpus", (dir / "corpus.txt").string(),
                          "--out", (dir / "pre").string(), "--seed", "2"});
    REQUIRE(pre.code == kExitOk);
    CHECK(contains(pre.out, "steps: 3"));
    CHECK(std::filesystem::exists(dir / "pre" / "metrics.txt"));

    const auto ckpt = (dir / "pre" / "final.ckpt").string();
    const auto cloze = run({"eval-cloze", "--checkpoint", ckpt, "--corpus", (dir / "heldout.txt").string()});
    CHECK(cloze.code == kExitOk);
    CHECK(contains(cloze.out, "accuracy:"));

    const auto attn = run({"attn-dump", "--checkpoint", ckpt, "--line", "w01 w02 w03", "--stack", "decoder"});
    CHECK(attn.code == kExitOk);
    CHECK(attn.out.rfind("pos,0,1,", 0) == 0);

    CHECK(run({"mask-stats", "--config", (dir / "run.cfg").string(), "--corpus", (dir / "corpus.txt").string(),
               "--tokens", "10000"})
              .code == kExitOk);

    REQUIRE(run({"export-encoder", "--checkpoint", ckpt, "--out", (dir / "enc").string()}).code == kExitOk);
    const auto enc = (dir / "enc" / "encoder.ckpt").string();
    CHECK(read_checkpoint_config(enc).model.decoder_layers == 0);
    const auto ft = run({"finetune", "--checkpoint", enc, "--data", (dir / "task.tsv").string(), "--epochs", "1"});
    CHECK(ft.code == kExitOk);
    CHECK(contains(ft.out, "dev_accuracy"));

    const auto refused = run({"finetune", "--checkpoint", ckpt, "--data", (dir / "task.tsv").string()});
    CHECK(refused.code == kExitFailure);
  }
}
