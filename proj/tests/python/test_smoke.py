# Copyright 2026 The bpdec Authors
# SPDX-License-Identifier: Apache-2.0

import math
import os
import pathlib
import subprocess

import pytest

import bpdec

CONFIGS = pathlib.Path(__file__).resolve().parents[2] / "configs"


def test_load_config():
    cfg = bpdec.load_config(str(CONFIGS / "tiny.cfg"))
    assert cfg["hidden"] == "16"
    assert cfg["decoder_layers"] == "1"


def test_bad_config_raises_value_error(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("hidden = 17\n")
    with pytest.raises(ValueError):
        bpdec.load_config(str(bad))


def test_flops_ratio():
    bpdec_large = bpdec.flops(str(CONFIGS / "bpdec_large.cfg"), "pretrain")
    bert_large = bpdec.flops(str(CONFIGS / "bert_large.cfg"), "pretrain")
    assert abs(bpdec_large["total"] / bert_large["total"] - 1.166) < 0.02 * 1.166
    assert bpdec_large["backward"] == 2 * bpdec_large["forward"]


def test_unmask_count():
    assert bpdec.unmask_count(0.5, 8) == 4
    assert bpdec.unmask_count(0.3, 10) == 3
    assert bpdec.unmask_count(1.0, 7) == 7


def test_gua_plan_nesting():
    masked = [i % 3 == 0 for i in range(30)]
    m = sum(masked)
    plan = bpdec.gua_plan(masked, [(1, 0.5), (2, 1.0)], 2, seed=4)
    assert len(plan) == 2
    assert sum(plan[0]) == math.ceil(0.5 * m)
    assert sum(plan[1]) == m
    assert all(b for a, b in zip(plan[0], plan[1]) if a)
    with pytest.raises(ValueError):
        bpdec.gua_plan(masked, [(1, 0.5)], 2)


def test_markov_and_mask_stats():
    lines = bpdec.markov_corpus(3000)
    assert len(lines) == 3000
    assert lines == bpdec.markov_corpus(3000)
    stats = bpdec.mask_stats(lines, tokens=20000)
    assert stats["maskable"] >= 20000
    assert abs(stats["select_rate"] - 0.15) < 0.01


def test_order_task_labels():
    rows = bpdec.order_task(200)
    assert len(rows) == 200
    assert {label for label, _ in rows} == {0, 1}


def test_cli_binding():
    code, out, _ = bpdec.cli(["flops", "--config", str(CONFIGS / "tiny.cfg")])
    assert code == 0
    assert "pretrain.total:" in out
    code, _, err = bpdec.cli(["flops", "--config", str(CONFIGS / "tiny.cfg"), "--nope"])
    assert code == 1
    assert "--nope" in err


def test_cli_executable():
    exe = os.environ.get("BPDEC_CLI")
    if not exe:
        pytest.skip("BPDEC_CLI not set")
    result = subprocess.run([exe, "--help"], capture_output=True, text=True, check=False)
    assert result.returncode == 0
    assert "pretrain" in result.stdout
