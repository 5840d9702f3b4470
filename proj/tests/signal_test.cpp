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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include "madsep/signal.hpp"
#include "test_util.hpp"

namespace madsep::signal {
namespace {

namespace fs = std::filesystem;
using madsep::testing::random_tensor;

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "madsep_signal_test";
  fs::create_directories(dir);
  return dir / name;
}

AudioClip noise_clip(std::size_t n, std::uint64_t seed, double sr = 44100.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  AudioClip c;
  c.sample_rate = sr;
  c.samples.resize(n);
  for (double& s : c.samples) s = u(gen);
  return c;
}

double snr_db(const std::vector<double>& ref, const std::vector<double>& est) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += ref[i] * ref[i];
    den += (ref[i] - est[i]) * (ref[i] - est[i]);
  }
  return 10.0 * std::log10(num / den);
}

// Writes a WAV with arbitrary format fields so the reader can be exercised
// on layouts the writer never produces.
void write_raw_wav(const fs::path& p, std::uint16_t tag, std::uint16_t channels,
                   std::uint16_t bits, const std::vector<std::uint8_t>& payload) {
  auto u32 = [](std::vector<std::uint8_t>& o, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) o.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto u16 = [](std::vector<std::uint8_t>& o, std::uint16_t v) {
    o.push_back(static_cast<std::uint8_t>(v));
    o.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  std::vector<std::uint8_t> o{'R', 'I', 'F', 'F'};
  u32(o, static_cast<std::uint32_t>(36 + 8 + 4 + payload.size()));
  o.insert(o.end(), {'W', 'A', 'V', 'E'});
  // An unrelated chunk before fmt must be skipped.
  o.insert(o.end(), {'L', 'I', 'S', 'T'});
  u32(o, 4);
  o.insert(o.end(), {'a', 'b', 'c', 'd'});
  o.insert(o.end(), {'f', 'm', 't', ' '});
  u32(o, 16);
  u16(o, tag);
  u16(o, channels);
  u32(o, 22050);
  u32(o, 22050u * channels * bits / 8);
  u16(o, static_cast<std::uint16_t>(channels * bits / 8));
  u16(o, bits);
  o.insert(o.end(), {'d', 'a', 't', 'a'});
  u32(o, static_cast<std::uint32_t>(payload.size()));
  o.insert(o.end(), payload.begin(), payload.end());
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(o.data()),
                                           static_cast<std::streamsize>(o.size()));
}

// ---------------------------------------------------------------------------
// WAV

TEST(Wav, SixteenBitRoundTripIsExactOnQuantisedSamples) {
  AudioClip c = noise_clip(1000, 1);
  for (double& s : c.samples) s = quantize_pcm16(s);
  const fs::path p = temp_path("rt16.wav");
  save_wav(p, c);
  const AudioClip r = load_wav_mono(p);
  EXPECT_EQ(r.sample_rate, 44100.0);
  EXPECT_EQ(r.samples, c.samples);
}

TEST(Wav, WriterClampsOutOfRangeSamples) {
  AudioClip c;
  c.samples = {2.0, -3.0, 0.5};
  const fs::path p = temp_path("clamp.wav");
  save_wav(p, c);
  const AudioClip r = load_wav_mono(p);
  EXPECT_DOUBLE_EQ(r.samples[0], 32767.0 / 32768.0);
  EXPECT_DOUBLE_EQ(r.samples[1], -1.0);
  EXPECT_DOUBLE_EQ(r.samples[2], 0.5);
}

TEST(Wav, StereoIdenticalChannelsAverageToThatChannel) {
  std::vector<std::uint8_t> payload;
  const std::vector<std::int16_t> x = {1000, -2000, 32767, -32768};
  for (std::int16_t v : x)
    for (int ch = 0; ch < 2; ++ch) {
      payload.push_back(static_cast<std::uint8_t>(v & 0xFF));
      payload.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    }
  const fs::path p = temp_path("stereo_same.wav");
  write_raw_wav(p, 1, 2, 16, payload);
  const AudioClip r = load_wav_mono(p);
  ASSERT_EQ(r.size(), x.size());
  EXPECT_EQ(r.sample_rate, 22050.0);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(r.samples[i], x[i] / 32768.0);
}

TEST(Wav, StereoOppositeChannelsCancel) {
  std::vector<std::uint8_t> payload;
  for (std::int16_t v : {std::int16_t{1234}, std::int16_t{-555}, std::int16_t{32000}}) {
    for (std::int16_t s : {v, static_cast<std::int16_t>(-v)}) {
      payload.push_back(static_cast<std::uint8_t>(s & 0xFF));
      payload.push_back(static_cast<std::uint8_t>((s >> 8) & 0xFF));
    }
  }
  const fs::path p = temp_path("stereo_cancel.wav");
  write_raw_wav(p, 1, 2, 16, payload);
  for (double s : load_wav_mono(p).samples) EXPECT_EQ(s, 0.0);
}

TEST(Wav, TwentyFourBitAndFloatDecode) {
  std::vector<std::uint8_t> p24;
  for (std::int32_t v : {0x400000, -0x800000, 1}) {
    p24.push_back(static_cast<std::uint8_t>(v & 0xFF));
    p24.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    p24.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
  }
  const fs::path a = temp_path("pcm24.wav");
  write_raw_wav(a, 1, 1, 24, p24);
  const AudioClip r24 = load_wav_mono(a);
  ASSERT_EQ(r24.size(), 3u);
  EXPECT_DOUBLE_EQ(r24.samples[0], 0.5);
  EXPECT_DOUBLE_EQ(r24.samples[1], -1.0);
  EXPECT_DOUBLE_EQ(r24.samples[2], 1.0 / 8388608.0);

  std::vector<std::uint8_t> pf;
  for (float f : {0.25f, -0.75f}) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int i = 0; i < 4; ++i) pf.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  const fs::path b = temp_path("float32.wav");
  write_raw_wav(b, 3, 1, 32, pf);
  const AudioClip rf = load_wav_mono(b);
  ASSERT_EQ(rf.size(), 2u);
  EXPECT_DOUBLE_EQ(rf.samples[0], 0.25);
  EXPECT_DOUBLE_EQ(rf.samples[1], -0.75);
}

TEST(Wav, ErrorsNameTheFile) {
  const fs::path bad = temp_path("garbage.wav");
  std::ofstream(bad) << "this is not audio";
  try {
    load_wav_mono(bad);
    FAIL() << "expected AudioError";
  } catch (const AudioError& e) {
    EXPECT_NE(std::string(e.what()).find("garbage.wav"), std::string::npos);
  }
  EXPECT_THROW(load_wav_mono(temp_path("does_not_exist.wav")), AudioError);

  const fs::path tri = temp_path("three_channels.wav");
  write_raw_wav(tri, 1, 3, 16, std::vector<std::uint8_t>(12, 0));
  EXPECT_THROW(load_wav_mono(tri), AudioError);
  const fs::path u8 = temp_path("eight_bit.wav");
  write_raw_wav(u8, 1, 1, 8, std::vector<std::uint8_t>(4, 128));
  EXPECT_THROW(load_wav_mono(u8), AudioError);
}

// ---------------------------------------------------------------------------
// STFT

TEST(Stft, HammingIsPeriodic) {
  const auto w = hamming(2049);
  EXPECT_DOUBLE_EQ(w[0], 0.08);
  // Periodic form: w[n] == w[N - n].
  for (std::size_t n = 1; n < 2049; ++n) EXPECT_NEAR(w[n], w[2049 - n], 1e-15);
  EXPECT_NEAR(w[1024], 0.54 + 0.46 * std::cos(std::numbers::pi / 2049.0), 1e-15);
}

TEST(Stft, FrameCountFormula) {
  const StftConfig cfg;
  for (std::size_t len : {2049u, 2050u, 4096u, 44100u, 176400u}) {
    const std::size_t expected = 1 + (len - 1) / 384;
    EXPECT_EQ(frame_count(len, cfg), expected);
    const auto spec = stft(noise_clip(len, len), cfg);
    EXPECT_EQ(spec.frames, expected);
    EXPECT_EQ(spec.bins, 2049u);
    EXPECT_EQ(spec.magnitude.size(), spec.phase.size());
  }
}

TEST(Stft, RejectsShortClipAndBadConfig) {
  EXPECT_THROW(stft(noise_clip(2048, 1)), std::invalid_argument);
  EXPECT_THROW(stft(noise_clip(5000, 1), StftConfig{.window_len = 100, .hop = 51, .fft_len = 128}),
               std::invalid_argument);
  EXPECT_THROW(stft(noise_clip(5000, 1), StftConfig{.window_len = 200, .hop = 50, .fft_len = 128}),
               std::invalid_argument);
}

TEST(Stft, MatchesDirectDftOracle) {
  const StftConfig cfg{.window_len = 63, .hop = 16, .fft_len = 128};
  const AudioClip clip = noise_clip(400, 7);
  const Spectrogram spec = stft(clip, cfg);
  const auto w = hamming(cfg.window_len);
  const std::size_t pad = cfg.window_len / 2;
  for (std::size_t t : {std::size_t{0}, std::size_t{3}, spec.frames - 1}) {
    for (std::size_t k = 0; k < spec.bins; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t i = 0; i < cfg.window_len; ++i) {
        // Sample index in the original clip with mirror reflection at the edges.
        long j = static_cast<long>(t * cfg.hop + i) - static_cast<long>(pad);
        const long n = static_cast<long>(clip.size());
        if (j < 0) j = -j;
        if (j >= n) j = 2 * (n - 1) - j;
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * i) /
                           static_cast<double>(cfg.fft_len);
        acc += clip.samples[static_cast<std::size_t>(j)] * w[i] * std::polar(1.0, ang);
      }
      EXPECT_NEAR(spec.magnitude[t * spec.bins + k], std::abs(acc), 1e-10);
      if (std::abs(acc) > 1e-6) {
        const std::complex<double> got =
            std::polar(spec.magnitude[t * spec.bins + k], spec.phase[t * spec.bins + k]);
        EXPECT_LT(std::abs(got - acc), 1e-9);
      }
    }
  }
}

TEST(Stft, BinCentredSinusoidPeaksAtItsBin) {
  const StftConfig cfg;
  const std::size_t bin = 100;
  AudioClip c;
  c.samples.resize(44100);
  for (std::size_t n = 0; n < c.size(); ++n) {
    c.samples[n] = std::sin(2.0 * std::numbers::pi * bin * static_cast<double>(n) / 4096.0);
  }
  const auto spec = stft(c, cfg);
  // Frames whose window reaches into the reflected padding are skipped.
  const std::size_t edge = (cfg.window_len / 2 + cfg.hop - 1) / cfg.hop;
  for (std::size_t t = edge; t + edge < spec.frames; ++t) {
    const auto row = spec.magnitude.begin() + static_cast<std::ptrdiff_t>(t * spec.bins);
    const auto peak = std::max_element(row, row + static_cast<std::ptrdiff_t>(spec.bins)) - row;
    EXPECT_EQ(static_cast<std::size_t>(peak), bin) << "frame " << t;
  }
}

TEST(Stft, ZeroClipGivesZeroMagnitude) {
  AudioClip c;
  c.samples.assign(5000, 0.0);
  const auto spec = stft(c);
  for (double m : spec.magnitude) EXPECT_EQ(m, 0.0);
  for (double s : istft(spec).samples) EXPECT_EQ(s, 0.0);
}

TEST(Stft, RoundTripSnrAtLeastSixtyDb) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const AudioClip c = noise_clip(4 * 44100, 100 + seed);
    const AudioClip r = istft(stft(c));
    ASSERT_EQ(r.size(), c.size());
    EXPECT_GE(snr_db(c.samples, r.samples), 60.0) << "seed " << seed;
  }
}

TEST(Stft, RoundTripOnSmallConfigs) {
  for (const StftConfig cfg : {StftConfig{.window_len = 30, .hop = 15, .fft_len = 30},
                               StftConfig{.window_len = 64, .hop = 8, .fft_len = 256}}) {
    const AudioClip c = noise_clip(3001, 11);
    const AudioClip r = istft(stft(c, cfg));
    EXPECT_GE(snr_db(c.samples, r.samples), 60.0);
  }
}

TEST(Stft, UnitMaskReproducesMixture) {
  const AudioClip c = noise_clip(20000, 12);
  Spectrogram spec = stft(c);
  const AudioClip plain = istft(spec);
  Tensor<double> mag = spec.magnitude_tensor();
  for (double& v : mag.data()) v *= 1.0;
  spec.set_magnitude(mag);
  EXPECT_EQ(istft(spec).samples, plain.samples);
}

TEST(Stft, IstftRejectsShapeMismatch) {
  Spectrogram spec = stft(noise_clip(5000, 13));
  spec.phase.pop_back();
  EXPECT_THROW(istft(spec), ShapeError);
  Spectrogram s2 = stft(noise_clip(5000, 13));
  EXPECT_THROW(s2.set_magnitude(Tensor<double>(Shape{2, 3})), ShapeError);
}

// ---------------------------------------------------------------------------
// Segmentation and trimming

Tensor<double> ramp(std::size_t frames, std::size_t bands) {
  // Row r holds r+1 everywhere so frame identity is recoverable.
  Tensor<double> m(Shape{frames, bands});
  for (std::size_t r = 0; r < frames; ++r)
    for (std::size_t c = 0; c < bands; ++c) m.at({r, c}) = static_cast<double>(r + 1);
  return m;
}

TEST(Segment, CeilingSegmentCount) {
  EXPECT_EQ(segment(ramp(120, 3), ramp(120, 3), 60, 10).size(), 2u);
  EXPECT_EQ(segment(ramp(61, 3), ramp(61, 3), 60, 10).size(), 2u);
  EXPECT_EQ(segment(ramp(60, 3), ramp(60, 3), 60, 10).size(), 1u);
  EXPECT_THROW(segment(ramp(60, 3), ramp(60, 3), 0, 10), std::invalid_argument);
}

TEST(Segment, ShapesAndZeroPadding) {
  const auto segs = segment(ramp(61, 3), ramp(61, 3), 60, 10);
  for (const auto& s : segs) {
    EXPECT_EQ(s.mixture_in.shape(), (Shape{70, 3}));
    EXPECT_EQ(s.target.shape(), (Shape{60, 3}));
  }
  // First segment: leading L/2 context rows lie before the track.
  for (std::size_t r = 0; r < 5; ++r) EXPECT_EQ(segs[0].mixture_in.at({r, 0}), 0.0);
  EXPECT_EQ(segs[0].mixture_in.at({5, 0}), 1.0);
  // Second segment: only frame 60 exists in its target.
  EXPECT_EQ(segs[1].target.at({0, 0}), 61.0);
  for (std::size_t r = 1; r < 60; ++r) EXPECT_EQ(segs[1].target.at({r, 2}), 0.0);
}

TEST(Segment, DisjointBlocksWhenNoContext) {
  const auto segs = segment(ramp(12, 2), ramp(12, 2), 4, 0);
  ASSERT_EQ(segs.size(), 3u);
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t r = 0; r < 4; ++r) {
      EXPECT_EQ(segs[b].mixture_in.at({r, 0}), static_cast<double>(b * 4 + r + 1));
      EXPECT_EQ(segs[b].mixture_in, segs[b].target);
    }
}

TEST(Segment, EveryTargetFrameCoveredExactlyOnceAndCentred) {
  for (std::size_t M : {1u, 7u, 59u, 60u, 61u, 125u, 300u}) {
    for (std::size_t L : {0u, 2u, 10u}) {
      const std::size_t T = 60;
      const auto mix = ramp(M, 2);
      const auto segs = segment(mix, mix, T, L);
      std::vector<int> hits(M, 0);
      for (std::size_t b = 0; b < segs.size(); ++b) {
        for (std::size_t r = 0; r < T; ++r) {
          const double v = segs[b].target.at({r, 1});
          if (v == 0.0) continue;
          ++hits[static_cast<std::size_t>(v) - 1];
          // Target row r sits at mixture row r + L/2.
          EXPECT_EQ(segs[b].mixture_in.at({r + L / 2, 1}), v);
        }
      }
      for (std::size_t f = 0; f < M; ++f) EXPECT_EQ(hits[f], 1) << "M=" << M << " L=" << L;
    }
  }
}

TEST(Segment, StitchInvertsTargetSegmentation) {
  const auto m = random_tensor({133, 5}, 3, 0.0, 1.0);
  const auto segs = segment(m, m, 60, 10);
  std::vector<Tensor<double>> blocks;
  for (const auto& s : segs) blocks.push_back(s.target);
  EXPECT_EQ(stitch(blocks, 133), m);
  EXPECT_THROW(stitch(blocks, 200), ShapeError);
}

TEST(Segment, RejectsMisalignedInputs) {
  EXPECT_THROW(segment(ramp(10, 3), ramp(11, 3), 4, 2), ShapeError);
}

TEST(TrimBands, KeepsLowestBands) {
  const auto v = random_tensor({70, 2049}, 5, 0.0, 1.0);
  const auto t = trim_bands(v, 744);
  EXPECT_EQ(t.shape(), (Shape{70, 744}));
  for (std::size_t i = 0; i < 70; ++i)
    for (std::size_t j = 0; j < 744; ++j) ASSERT_EQ(t.at({i, j}), v.at({i, j}));
  EXPECT_EQ(trim_bands(v, 2049), v);
  const auto first = trim_bands(v, 1);
  for (std::size_t i = 0; i < 70; ++i) EXPECT_EQ(first.at({i, 0}), v.at({i, 0}));
  EXPECT_THROW(trim_bands(v, 2050), std::invalid_argument);
}

}  // namespace
}  // namespace madsep::signal
