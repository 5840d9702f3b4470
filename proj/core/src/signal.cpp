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

#include "madsep/signal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>

#include "fftw_util.hpp"

namespace madsep::signal {
namespace {

using detail::fftw_alloc;
using detail::planner_mutex;
using detail::Plan;

// ---------------------------------------------------------------------------
// WAV container

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

struct WavFormat {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
};

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

double decode_sample(const std::uint8_t* p, const WavFormat& fmt) {
  if (fmt.tag == kFormatFloat) {
    if (fmt.bits == 32) {
      std::uint32_t u = read_u32(p);
      float f;
      std::memcpy(&f, &u, sizeof f);
      return f;
    }
    std::uint64_t u = static_cast<std::uint64_t>(read_u32(p)) |
                      static_cast<std::uint64_t>(read_u32(p + 4)) << 32;
    double d;
    std::memcpy(&d, &u, sizeof d);
    return d;
  }
  switch (fmt.bits) {
    case 16:
      return static_cast<std::int16_t>(read_u16(p)) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(p[0] | p[1] << 8 | p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    default:
      return static_cast<std::int32_t>(read_u32(p)) / 2147483648.0;
  }
}

}  // namespace

void AudioClip::validate() const {
  if (!(sample_rate > 0.0)) throw std::invalid_argument("AudioClip: sample_rate must be > 0");
  for (double s : samples) {
    if (!std::isfinite(s)) throw std::invalid_argument("AudioClip: non-finite sample");
  }
}

AudioClip load_wav_mono(const std::filesystem::path& path) {
  const std::string where = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioError(where + ": cannot open file");
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw AudioError(where + ": not a RIFF/WAVE file");
  }

  std::optional<WavFormat> fmt;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;
  for (std::size_t pos = 12; pos + 8 <= bytes.size();) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::size_t len = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min(len, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw AudioError(where + ": truncated fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      WavFormat w{read_u16(f), read_u16(f + 2), read_u32(f + 4), read_u16(f + 14)};
      if (w.tag == kFormatExtensible) {
        if (avail < 26) throw AudioError(where + ": truncated extensible fmt chunk");
        w.tag = read_u16(f + 24);
      }
      fmt = w;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = avail;
    }
    pos = body + len + (len & 1);
  }
  if (!fmt) throw AudioError(where + ": missing fmt chunk");
  if (!data) throw AudioError(where + ": missing data chunk");
  if (fmt->channels != 1 && fmt->channels != 2) {
    throw AudioError(where + ": unsupported channel count " + std::to_string(fmt->channels));
  }
  const bool pcm_ok = fmt->tag == kFormatPcm &&
                      (fmt->bits == 16 || fmt->bits == 24 || fmt->bits == 32);
  const bool float_ok = fmt->tag == kFormatFloat && (fmt->bits == 32 || fmt->bits == 64);
  if (!pcm_ok && !float_ok) {
    throw AudioError(where + ": unsupported sample format (tag " + std::to_string(fmt->tag) +
                     ", " + std::to_string(fmt->bits) + " bits)");
  }
  if (fmt->rate == 0) throw AudioError(where + ": sample rate is zero");

  const std::size_t width = fmt->bits / 8;
  const std::size_t frame_bytes = width * fmt->channels;
  const std::size_t n = data_len / frame_bytes;
  AudioClip clip;
  clip.sample_rate = fmt->rate;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = data + i * frame_bytes;
    double v = decode_sample(p, *fmt);
    if (fmt->channels == 2) v = 0.5 * (v + decode_sample(p + width, *fmt));
    if (!std::isfinite(v)) throw AudioError(where + ": non-finite sample at frame " + std::to_string(i));
    clip.samples[i] = v;
  }
  return clip;
}

double quantize_pcm16(double x) {
  const double c = std::clamp(x, -1.0, 32767.0 / 32768.0);
  return std::nearbyint(c * 32768.0) / 32768.0;
}

void save_wav(const std::filesystem::path& path, const AudioClip& clip) {
  clip.validate();
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  const auto rate = static_cast<std::uint32_t>(std::lround(clip.sample_rate));
  std::vector<std::uint8_t> out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + 2 * n);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, 2 * n);
  for (double s : clip.samples) {
    const auto v = static_cast<std::int16_t>(std::lround(quantize_pcm16(s) * 32768.0));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw AudioError(path.string() + ": cannot open for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw AudioError(path.string() + ": write failed");
}

// ---------------------------------------------------------------------------
// STFT

void StftConfig::validate() const {
  if (window_len == 0 || hop == 0 || hop > window_len / 2 || window_len > fft_len) {
    throw std::invalid_argument("StftConfig: need 0 < hop <= window_len/2 and window_len <= "
                                "fft_len (window " + std::to_string(window_len) + ", hop " +
                                std::to_string(hop) + ", fft " + std::to_string(fft_len) + ")");
  }
}

std::vector<double> hamming(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(n));
  }
  return w;
}

Tensor<double> Spectrogram::magnitude_tensor() const {
  return Tensor<double>(Shape{frames, bins}, magnitude);
}

void Spectrogram::set_magnitude(const Tensor<double>& mag) {
  if (mag.shape() != Shape{frames, bins}) {
    throw ShapeError("set_magnitude: expected " + shape_str(Shape{frames, bins}) + ", got " +
                     shape_str(mag.shape()));
  }
  for (double v : mag.data()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("set_magnitude: magnitudes must be finite and >= 0");
    }
  }
  magnitude = mag.values();
}

std::size_t frame_count(std::size_t length, const StftConfig& cfg) {
  const std::size_t padded = length + 2 * (cfg.window_len / 2);
  if (padded < cfg.window_len) return 0;
  return 1 + (padded - cfg.window_len) / cfg.hop;
}

Spectrogram stft(const AudioClip& clip, const StftConfig& cfg) {
  cfg.validate();
  clip.validate();
  const std::size_t len = clip.size();
  if (len < cfg.window_len) {
    throw std::invalid_argument("stft: clip has " + std::to_string(len) +
                                " samples, fewer than one window (" +
                                std::to_string(cfg.window_len) + ")");
  }
  const std::size_t pad = cfg.window_len / 2;
  std::vector<double> padded(len + 2 * pad);
  for (std::size_t i = 0; i < padded.size(); ++i) {
    // Reflection without repeating the edge sample.
    const auto j = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad);
    const auto n = static_cast<std::ptrdiff_t>(len);
    std::ptrdiff_t k = j < 0 ? -j : j;
    if (k >= n) k = 2 * (n - 1) - k;
    padded[i] = clip.samples[static_cast<std::size_t>(k)];
  }

  Spectrogram spec;
  spec.config = cfg;
  spec.frames = frame_count(len, cfg);
  spec.bins = cfg.bins();
  spec.signal_length = len;
  spec.sample_rate = clip.sample_rate;
  spec.magnitude.resize(spec.frames * spec.bins);
  spec.phase.resize(spec.frames * spec.bins);

  const std::vector<double> window = hamming(cfg.window_len);
  auto in = fftw_alloc<double>(cfg.fft_len);
  auto out = fftw_alloc<fftw_complex>(spec.bins);
  std::optional<Plan> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.emplace(fftw_plan_dft_r2c_1d(static_cast<int>(cfg.fft_len), in.get(), out.get(),
                                      FFTW_ESTIMATE));
  }
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const double* src = padded.data() + t * cfg.hop;
    for (std::size_t i = 0; i < cfg.window_len; ++i) in[i] = src[i] * window[i];
    std::fill(in.get() + cfg.window_len, in.get() + cfg.fft_len, 0.0);
    plan->execute();
    for (std::size_t k = 0; k < spec.bins; ++k) {
      const std::complex<double> z(out[k][0], out[k][1]);
      spec.magnitude[t * spec.bins + k] = std::abs(z);
      spec.phase[t * spec.bins + k] = std::arg(z);
    }
  }
  return spec;
}

AudioClip istft(const Spectrogram& spec) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  const std::size_t expect = spec.frames * spec.bins;
  if (spec.bins != cfg.bins() || spec.magnitude.size() != expect || spec.phase.size() != expect) {
    throw ShapeError("istft: magnitude/phase shapes disagree with " +
                     std::to_string(spec.frames) + " x " + std::to_string(spec.bins));
  }
  const std::size_t pad = cfg.window_len / 2;
  const std::size_t total = (spec.frames - 1) * cfg.hop + cfg.window_len;
  std::vector<double> acc(std::max(total, spec.signal_length + 2 * pad), 0.0);
  std::vector<double> norm(acc.size(), 0.0);

  const std::vector<double> window = hamming(cfg.window_len);
  auto in = fftw_alloc<fftw_complex>(spec.bins);
  auto out = fftw_alloc<double>(cfg.fft_len);
  std::optional<Plan> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.emplace(fftw_plan_dft_c2r_1d(static_cast<int>(cfg.fft_len), in.get(), out.get(),
                                      FFTW_ESTIMATE));
  }
  const double scale = 1.0 / static_cast<double>(cfg.fft_len);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t k = 0; k < spec.bins; ++k) {
      const auto z = std::polar(spec.magnitude[t * spec.bins + k], spec.phase[t * spec.bins + k]);
      in[k][0] = z.real();
      in[k][1] = z.imag();
    }
    plan->execute();
    double* dst = acc.data() + t * cfg.hop;
    double* nrm = norm.data() + t * cfg.hop;
    for (std::size_t i = 0; i < cfg.window_len; ++i) {
      dst[i] += out[i] * scale * window[i];
      nrm[i] += window[i] * window[i];
    }
  }

  constexpr double kFloor = 1e-10;
  AudioClip clip;
  clip.sample_rate = spec.sample_rate;
  clip.samples.resize(spec.signal_length);
  for (std::size_t i = 0; i < spec.signal_length; ++i) {
    clip.samples[i] = acc[i + pad] / std::max(norm[i + pad], kFloor);
  }
  return clip;
}

// ---------------------------------------------------------------------------
// Segmentation

namespace {

void require_matrix(const Tensor<double>& m, const char* what) {
  if (m.rank() != 2) {
    throw ShapeError(std::string(what) + ": expected a frames x bands matrix, got " +
                     shape_str(m.shape()));
  }
}

// Rows [begin, begin + count) of `m`, zero outside the matrix.
Tensor<double> window_rows(const Tensor<double>& m, std::ptrdiff_t begin, std::size_t count) {
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  Tensor<double> out(Shape{count, cols});
  for (std::size_t r = 0; r < count; ++r) {
    const std::ptrdiff_t src = begin + static_cast<std::ptrdiff_t>(r);
    if (src < 0 || src >= static_cast<std::ptrdiff_t>(rows)) continue;
    std::copy_n(m.data().begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(src) * cols),
                cols, out.data().begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  return out;
}

}  // namespace

std::size_t segment_count(std::size_t frames, std::size_t T) {
  if (T == 0) throw std::invalid_argument("segment: T must be positive");
  return (frames + T - 1) / T;
}

std::vector<Tensor<double>> segment_inputs(const Tensor<double>& mix, std::size_t T,
                                           std::size_t L) {
  require_matrix(mix, "segment");
  const std::size_t B = segment_count(mix.dim(0), T);
  std::vector<Tensor<double>> out;
  out.reserve(B);
  for (std::size_t b = 0; b < B; ++b) {
    const auto start = static_cast<std::ptrdiff_t>(b * T) - static_cast<std::ptrdiff_t>(L / 2);
    out.push_back(window_rows(mix, start, T + L));
  }
  return out;
}

std::vector<SegmentPair> segment(const Tensor<double>& mix, const Tensor<double>& tgt,
                                 std::size_t T, std::size_t L) {
  require_matrix(mix, "segment");
  require_matrix(tgt, "segment");
  if (mix.shape() != tgt.shape()) {
    throw ShapeError("segment: mixture " + shape_str(mix.shape()) + " and target " +
                     shape_str(tgt.shape()) + " are not frame-aligned");
  }
  auto inputs = segment_inputs(mix, T, L);
  std::vector<SegmentPair> out;
  out.reserve(inputs.size());
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    out.push_back({std::move(inputs[b]),
                   window_rows(tgt, static_cast<std::ptrdiff_t>(b * T), T)});
  }
  return out;
}

Tensor<double> stitch(const std::vector<Tensor<double>>& blocks, std::size_t frames) {
  if (blocks.empty()) throw std::invalid_argument("stitch: no blocks");
  const std::size_t T = blocks.front().dim(0), F = blocks.front().dim(1);
  if (blocks.size() * T < frames) {
    throw ShapeError("stitch: " + std::to_string(blocks.size()) + " blocks of " +
                     std::to_string(T) + " frames cannot cover " + std::to_string(frames));
  }
  Tensor<double> out(Shape{frames, F});
  std::size_t row = 0;
  for (const auto& blk : blocks) {
    if (blk.shape() != Shape{T, F}) {
      throw ShapeError("stitch: block shape " + shape_str(blk.shape()) + " differs from " +
                       shape_str(Shape{T, F}));
    }
    const std::size_t take = std::min(T, frames - row);
    std::copy_n(blk.data().begin(), take * F,
                out.data().begin() + static_cast<std::ptrdiff_t>(row * F));
    row += take;
    if (row == frames) break;
  }
  return out;
}

Tensor<double> trim_bands(const Tensor<double>& v, std::size_t n) {
  if (v.rank() == 0) throw ShapeError("trim_bands: scalar input");
  const std::size_t F = v.shape().back();
  if (n == 0 || n > F) {
    throw std::invalid_argument("trim_bands: N_tr=" + std::to_string(n) +
                                " must be in [1, " + std::to_string(F) + "]");
  }
  Shape shape = v.shape();
  shape.back() = n;
  Tensor<double> out(shape);
  const std::size_t rows = v.size() / F;
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(v.data().begin() + static_cast<std::ptrdiff_t>(r * F), n,
                out.data().begin() + static_cast<std::ptrdiff_t>(r * n));
  }
  return out;
}

}  // namespace madsep::signal
