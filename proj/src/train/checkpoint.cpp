// Copyright 2026 The bpdec Authors
// SPDX-License-Identifier: Apache-2.0

#include "bpdec/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace bpdec {

namespace {

constexpr std::uint8_t kDtypeF32 = 1;
constexpr std::uint8_t kDtypeF64 = 2;
constexpr std::string_view kMomentM = "optim.m.";
constexpr std::string_view kMomentV = "optim.v.";

template <typename T>
constexpr std::uint8_t dtype_tag() {
  return std::is_same_v<T, float> ? kDtypeF32 : kDtypeF64;
}

template <typename U>
void put_uint(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void put_block(std::string& out, const std::string& text) {
  put_uint<std::uint64_t>(out, text.size());
  out += text;
}

template <typename T>
void put_array(std::string& out, const std::string& name, const Tensor<T>& t) {
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  out.push_back(static_cast<char>(dtype_tag<T>()));
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t e : t.shape()) put_uint<std::uint64_t>(out, e);
  using Bits = std::conditional_t<std::is_same_v<T, float>, std::uint32_t, std::uint64_t>;
  for (T v : t.values()) put_uint<Bits>(out, std::bit_cast<Bits>(v));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  const char* take(std::size_t n, const char* what) {
    if (n > bytes_.size() - pos_) throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  template <typename U>
  U uint(const char* what) {
    const auto* p = reinterpret_cast<const unsigned char*>(take(sizeof(U), what));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
    return v;
  }

  std::string block(const char* what) {
    const auto n = uint<std::uint64_t>(what);
    return std::string(take(n, what), n);
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::string progress_text(const TrainProgress& p, const std::optional<std::size_t>& adam_step) {
  std::ostringstream os;
  os << "seed=" << p.seed << "\n";
  os << "step=" << p.step << "\n";
  os << "data.epoch=" << p.data.epoch << "\n";
  os << "data.cursor=" << p.data.cursor << "\n";
  os << "data.epoch_seed=" << p.data.epoch_seed << "\n";
  os << "data.started=" << (p.data.started ? 1 : 0) << "\n";
  os << "adam=" << (adam_step ? 1 : 0) << "\n";
  os << "adam.step=" << adam_step.value_or(0) << "\n";
  for (const auto& [name, state] : p.rng_states) os << "rng." << name << "=" << state << "\n";
  return os.str();
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw CheckpointError("checkpoint progress: bad value for '" + key + "': '" + value + "'");
  }
}

struct ParsedProgress {
  TrainProgress progress;
  bool has_adam = false;
  std::size_t adam_step = 0;
};

ParsedProgress parse_progress(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError("checkpoint progress: malformed line '" + line + "'");
    if (!kv.emplace(line.substr(0, eq), line.substr(eq + 1)).second) {
      throw CheckpointError("checkpoint progress: repeated key '" + line.substr(0, eq) + "'");
    }
  }
  auto get = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw CheckpointError("checkpoint progress: missing key '" + key + "'");
    return parse_u64(key, it->second);
  };
  ParsedProgress out;
  out.progress.seed = get("seed");
  out.progress.step = get("step");
  out.progress.data.epoch = get("data.epoch");
  out.progress.data.cursor = get("data.cursor");
  out.progress.data.epoch_seed = get("data.epoch_seed");
  out.progress.data.started = get("data.started") != 0;
  out.has_adam = get("adam") != 0;
  out.adam_step = get("adam.step");
  for (const auto& [key, value] : kv) {
    if (key.starts_with("rng.")) out.progress.rng_states.emplace(key.substr(4), value);
  }
  return out;
}

std::string vocab_text(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) out += t + "\n";
  return out;
}

std::vector<std::string> parse_vocab(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Header {
  RunConfig config;
  ParsedProgress progress;
  std::vector<std::string> vocab;
};

Header read_header(Reader& r) {
  const char* magic = r.take(sizeof kCheckpointMagic, "magic");
  if (std::memcmp(magic, kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw CheckpointError("not a checkpoint: bad magic");
  }
  const auto version = r.uint<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Header h;
  try {
    h.config = parse_config(r.block("config"));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
  h.progress = parse_progress(r.block("progress"));
  h.vocab = parse_vocab(r.block("vocabulary"));
  return h;
}

}  // namespace

template <typename T>
std::string serialize_checkpoint(const Checkpoint<T>& ckpt) {
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put_uint<std::uint32_t>(out, kCheckpointVersion);
  put_block(out, to_text(ckpt.config));
  std::optional<std::size_t> adam_step;
  if (ckpt.adam) adam_step = ckpt.adam->step;
  put_block(out, progress_text(ckpt.progress, adam_step));
  put_block(out, vocab_text(ckpt.vocab));
  const std::size_t n = ckpt.params.size() * (ckpt.adam ? 3 : 1);
  put_uint<std::uint64_t>(out, n);
  for (const auto& [name, t] : ckpt.params) put_array(out, name, t);
  if (ckpt.adam) {
    for (const auto& [name, t] : ckpt.adam->m) put_array(out, std::string(kMomentM) + name, t);
    for (const auto& [name, t] : ckpt.adam->v) put_array(out, std::string(kMomentV) + name, t);
  }
  return out;
}

template <typename T>
Checkpoint<T> parse_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  Header h = read_header(r);
  Checkpoint<T> ckpt;
  ckpt.config = h.config;
  ckpt.progress = h.progress.progress;
  ckpt.vocab = std::move(h.vocab);

  ParamStore<T> m, v;
  const auto n = r.uint<std::uint64_t>("array count");
  for (std::uint64_t a = 0; a < n; ++a) {
    const auto name_len = r.uint<std::uint32_t>("array name length");
    std::string name(r.take(name_len, "array name"), name_len);
    const auto dtype = static_cast<std::uint8_t>(*r.take(1, "dtype"));
    if (dtype != kDtypeF32 && dtype != kDtypeF64) {
      throw CheckpointError("array '" + name + "': unknown dtype tag " + std::to_string(dtype));
    }
    if (dtype != dtype_tag<T>()) {
      throw CheckpointError("array '" + name + "': stored as " + (dtype == kDtypeF32 ? "f32" : "f64") +
                            ", requested " + (dtype_tag<T>() == kDtypeF32 ? "f32" : "f64"));
    }
    const auto rank = r.uint<std::uint32_t>("rank");
    if (rank == 0 || rank > 8) throw CheckpointError("array '" + name + "': bad rank " + std::to_string(rank));
    Shape shape(rank);
    std::size_t count = 1;
    for (auto& e : shape) {
      e = r.uint<std::uint64_t>("extent");
      if (e == 0 || count > bytes.size() / e) throw CheckpointError("array '" + name + "': bad extents");
      count *= e;
    }
    using Bits = std::conditional_t<std::is_same_v<T, float>, std::uint32_t, std::uint64_t>;
    std::vector<T> data(count);
    for (auto& x : data) x = std::bit_cast<T>(r.uint<Bits>("payload"));
    Tensor<T> t(std::move(shape), std::move(data));
    try {
      if (name.starts_with(kMomentM)) {
        m.insert(name.substr(kMomentM.size()), std::move(t));
      } else if (name.starts_with(kMomentV)) {
        v.insert(name.substr(kMomentV.size()), std::move(t));
      } else {
        ckpt.params.insert(name, std::move(t));
      }
    } catch (const std::invalid_argument& e) {
      throw CheckpointError(std::string("checkpoint arrays: ") + e.what());
    }
  }
  if (!r.done()) throw CheckpointError("checkpoint has trailing bytes");

  if (h.progress.has_adam) {
    for (const auto* store : {&m, &v}) {
      if (store->size() != ckpt.params.size()) throw CheckpointError("optimizer moments do not cover the parameters");
      for (const auto& [name, t] : *store) {
        if (!ckpt.params.contains(name) || ckpt.params.at(name).shape() != t.shape()) {
          throw CheckpointError("optimizer moment '" + name + "' does not match a parameter");
        }
      }
    }
    ckpt.adam = AdamState<T>{std::move(m), std::move(v), h.progress.adam_step};
  } else if (m.size() + v.size() > 0) {
    throw CheckpointError("optimizer moments present but optimizer state flagged absent");
  }
  return ckpt;
}

template <typename T>
void save_checkpoint(const Checkpoint<T>& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw CheckpointError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  try {
    return parse_checkpoint<T>(read_file(path));
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

RunConfig read_checkpoint_config(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  Reader r(bytes);
  return read_header(r).config;
}

#define BPDEC_INSTANTIATE_CHECKPOINT(T)                                                 \
  template std::string serialize_checkpoint<T>(const Checkpoint<T>&);                   \
  template Checkpoint<T> parse_checkpoint<T>(const std::string&);                       \
  template void save_checkpoint<T>(const Checkpoint<T>&, const std::filesystem::path&); \
  template Checkpoint<T> load_checkpoint<T>(const std::filesystem::path&);

BPDEC_INSTANTIATE_CHECKPOINT(float)
BPDEC_INSTANTIATE_CHECKPOINT(double)

#undef BPDEC_INSTANTIATE_CHECKPOINT

}  // namespace bpdec
