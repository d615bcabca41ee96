// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bpdec {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

/// Subcommands: pretrain, finetune, export-encoder, eval-cloze, flops,
/// gradcheck, mask-stats, attn-dump, synth-data. `args` excludes the
/// program name. Returns 0 on success (and for --help), 1 for usage errors,
/// 2 for runtime failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bpdec
