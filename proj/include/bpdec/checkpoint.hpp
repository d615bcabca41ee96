// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpdec/batch_stream.hpp"
#include "bpdec/config.hpp"
#include "bpdec/optimizer.hpp"
#include "bpdec/param_store.hpp"

namespace bpdec {

/// Everything besides tensors that a resumed run needs.
struct TrainProgress {
  std::uint64_t seed = 0;
  std::size_t step = 0;
  BatchStream::Position data;
  std::map<std::string, std::string> rng_states;  // stream name → Rng::state()
  bool operator==(const TrainProgress&) const = default;
};

template <typename T>
struct Checkpoint {
  RunConfig config;
  ParamStore<T> params;
  std::optional<AdamState<T>> adam;
  TrainProgress progress;
  std::vector<std::string> vocab;  // corpus tokens for ids 5, 6, ...
  bool operator==(const Checkpoint&) const = default;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[8] = {'B', 'P', 'D', 'E', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, all integers little-endian:
///   magic "BPDECKPT", u32 version,
///   u64 length + canonical config text,
///   u64 length + progress text (key=value lines),
///   u64 length + vocabulary text (one token per line),
///   u64 array count, then per array: u32 name length, name, u8 dtype
///   (1 = f32, 2 = f64), u32 rank, u64 extents[rank], row-major IEEE-754
///   payload. Optimizer moments are arrays named "optim.m.<param>" and
///   "optim.v.<param>"; the Adam step count is in the progress text.
template <typename T>
std::string serialize_checkpoint(const Checkpoint<T>& ckpt);

/// Rejects bad magic, unknown versions, dtype mismatches, truncation,
/// trailing bytes and inconsistent optimizer arrays.
template <typename T>
Checkpoint<T> parse_checkpoint(const std::string& bytes);

/// Writes to "<path>.tmp" and renames over `path`.
template <typename T>
void save_checkpoint(const Checkpoint<T>& ckpt, const std::filesystem::path& path);

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

/// Config block only, for choosing the precision before a full load.
RunConfig read_checkpoint_config(const std::filesystem::path& path);

}  // namespace bpdec
