// Copyright 2026 The madsep Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "madsep/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "json.hpp"

namespace madsep::models {
namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'M', 'A', 'D', 'C', 'K', 'P', 'T', '\0'};
constexpr int kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
constexpr const char* dtype_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

json config_to_json(const MaskerConfig& c) {
  return json{{"variant", to_string(c.variant)}, {"F", c.F},         {"N_tr", c.N_tr},
              {"T", c.T},                        {"L", c.L},         {"L_enc", c.L_enc},
              {"C_o", c.C_o},                    {"p_enc", c.p_enc}, {"p_dec", c.p_dec},
              {"pool_h", c.pool_h},              {"pool_w", c.pool_w}};
}

MaskerConfig config_from_json(const json& j) {
  MaskerConfig c;
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.F = j.at("F");
  c.N_tr = j.at("N_tr");
  c.T = j.at("T");
  c.L = j.at("L");
  c.L_enc = j.at("L_enc");
  c.C_o = j.at("C_o");
  c.p_enc = j.at("p_enc");
  c.p_dec = j.at("p_dec");
  c.pool_h = j.at("pool_h");
  c.pool_w = j.at("pool_w");
  return c;
}

struct Entry {
  std::string name;
  const void* data;
  std::size_t count;
  Shape shape;
  std::string kind;
};

template <typename T>
void collect(std::vector<Entry>& out, const std::string& stage,
             const std::map<std::string, Tensor<T>>& m, const char* kind) {
  for (const auto& [name, t] : m) {
    out.push_back({stage + "/" + name, t.data().data(), t.size(), t.shape(), kind});
  }
}

template <typename Src, typename T>
void decode_into(Tensor<T>& dst, const std::uint8_t* src) {
  for (std::size_t i = 0; i < dst.size(); ++i) {
    Src v;
    std::memcpy(&v, src + i * sizeof(Src), sizeof(Src));
    dst[i] = static_cast<T>(v);
  }
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Checkpoint<T>& ckpt) {
  std::vector<Entry> entries;
  collect(entries, "masker", ckpt.params.masker.params, "param");
  collect(entries, "masker", ckpt.params.masker.buffers, "buffer");
  collect(entries, "denoiser", ckpt.params.denoiser.params, "param");
  collect(entries, "denoiser", ckpt.params.denoiser.buffers, "buffer");

  json tensors = json::array();
  std::size_t offset = 0;
  for (const auto& e : entries) {
    tensors.push_back({{"name", e.name}, {"shape", e.shape}, {"offset", offset}, {"kind", e.kind}});
    offset += e.count * sizeof(T);
  }
  const json header{{"format", "madsep-checkpoint"},
                    {"version", kVersion},
                    {"dtype", dtype_name<T>()},
                    {"config", config_to_json(ckpt.config)},
                    {"stft",
                     {{"window_len", ckpt.stft.window_len},
                      {"hop", ckpt.stft.hop},
                      {"fft_len", ckpt.stft.fft_len}}},
                    {"run_config", ckpt.run_config},
                    {"tensors", tensors}};
  const std::string text = header.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError(path.string() + ": cannot open for writing");
  f.write(kMagic, sizeof kMagic);
  const std::uint64_t len = text.size();
  f.write(reinterpret_cast<const char*>(&len), sizeof len);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& e : entries) {
    f.write(static_cast<const char*>(e.data), static_cast<std::streamsize>(e.count * sizeof(T)));
  }
  if (!f) throw CheckpointError(path.string() + ": write failed");
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  const std::string where = path.string();
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(where + ": cannot open checkpoint");
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(f),
                                        std::istreambuf_iterator<char>()};
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError(where + ": not a madsep checkpoint");
  }
  std::uint64_t len;
  std::memcpy(&len, bytes.data() + 8, sizeof len);
  if (len > bytes.size() - 16) throw CheckpointError(where + ": truncated header");
  const std::uint8_t* data = bytes.data() + 16 + len;
  const std::size_t data_size = bytes.size() - 16 - len;

  Checkpoint<T> ck;
  try {
    const json h = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len));
    if (h.at("version").get<int>() != kVersion) {
      throw CheckpointError(where + ": unsupported version " + h.at("version").dump());
    }
    const std::string dtype = h.at("dtype");
    if (dtype != "f32" && dtype != "f64") throw CheckpointError(where + ": bad dtype " + dtype);
    const std::size_t width = dtype == "f32" ? 4 : 8;
    ck.config = config_from_json(h.at("config"));
    ck.config.validate();
    ck.stft.window_len = h.at("stft").at("window_len");
    ck.stft.hop = h.at("stft").at("hop");
    ck.stft.fft_len = h.at("stft").at("fft_len");
    ck.run_config = h.at("run_config").get<std::map<std::string, std::string>>();

    for (const auto& t : h.at("tensors")) {
      const std::string full = t.at("name");
      const auto slash = full.find('/');
      if (slash == std::string::npos) throw CheckpointError(where + ": bad tensor name " + full);
      const std::string stage = full.substr(0, slash), name = full.substr(slash + 1);
      nn::LayerParams<T>* lp = stage == "masker"     ? &ck.params.masker
                               : stage == "denoiser" ? &ck.params.denoiser
                                                     : nullptr;
      if (!lp) throw CheckpointError(where + ": unknown stage in " + full);
      Tensor<T> tensor(t.at("shape").get<Shape>());
      const std::size_t off = t.at("offset");
      if (off + tensor.size() * width > data_size) {
        throw CheckpointError(where + ": tensor " + full + " runs past end of file");
      }
      if (width == 4) {
        decode_into<float>(tensor, data + off);
      } else {
        decode_into<double>(tensor, data + off);
      }
      auto& dst = t.at("kind") == "buffer" ? lp->buffers : lp->params;
      dst.insert_or_assign(name, std::move(tensor));
    }
  } catch (const json::exception& e) {
    throw CheckpointError(where + ": malformed header (" + e.what() + ")");
  }

  // The stored tensors must match the declared architecture exactly.
  auto check = [&](const nn::ParamSpecs& specs, const nn::LayerParams<T>& lp, const char* stage) {
    std::size_t seen = 0;
    for (const auto& s : specs) {
      const auto& m = s.buffer ? lp.buffers : lp.params;
      auto it = m.find(s.name);
      if (it == m.end() || it->second.shape() != s.shape) {
        throw CheckpointError(where + ": " + stage + " tensor '" + s.name +
                              "' missing or misshapen for the stored config");
      }
      ++seen;
    }
    if (seen != lp.params.size() + lp.buffers.size()) {
      throw CheckpointError(where + ": " + stage + " holds tensors not in the stored config");
    }
  };
  check(masker_spec(ck.config), ck.params.masker, "masker");
  check(denoiser_spec(ck.config.F), ck.params.denoiser, "denoiser");
  return ck;
}

template void save_checkpoint(const std::filesystem::path&, const Checkpoint<float>&);
template void save_checkpoint(const std::filesystem::path&, const Checkpoint<double>&);
template Checkpoint<float> load_checkpoint(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint(const std::filesystem::path&);

}  // namespace madsep::models
