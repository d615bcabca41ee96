# Copyright 2026 The bpdec Authors
# SPDX-License-Identifier: Apache-2.0

"""Python bindings for the bpdec pretraining lab."""

from bpdec._bpdec import (
    cli,
    flops,
    gua_plan,
    load_config,
    markov_corpus,
    mask_stats,
    order_task,
    unmask_count,
)

__all__ = [
    "cli",
    "flops",
    "gua_plan",
    "load_config",
    "markov_corpus",
    "mask_stats",
    "order_task",
    "unmask_count",
]
