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

#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "madsep/tensor.hpp"

namespace madsep::signal {

/// Raised for unreadable, malformed or unsupported audio files.
class AudioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AudioClip {
  std::vector<double> samples;
  double sample_rate = 44100.0;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  /// Throws std::invalid_argument when a sample is non-finite or the rate is not positive.
  void validate() const;
};

/// Reads PCM 16/24/32-bit integer or 32/64-bit float WAV with one or two
/// channels. Stereo is averaged to mono; integer samples are scaled to [-1, 1).
AudioClip load_wav_mono(const std::filesystem::path& path);

/// Writes a mono 16-bit PCM WAV. Samples are clamped to [-1, 1] and rounded
/// to the nearest multiple of 1/32768.
void save_wav(const std::filesystem::path& path, const AudioClip& clip);

/// Rounds to the value a 16-bit PCM round trip would produce.
double quantize_pcm16(double x);

struct StftConfig {
  std::size_t window_len = 2049;
  std::size_t hop = 384;
  std::size_t fft_len = 4096;

  std::size_t bins() const { return fft_len / 2 + 1; }
  /// Throws std::invalid_argument unless 0 < hop <= window_len / 2 and
  /// window_len <= fft_len.
  void validate() const;
};

/// Periodic Hamming window of length n.
std::vector<double> hamming(std::size_t n);

/// Magnitude and phase planes, both frames x bins, row-major.
struct Spectrogram {
  StftConfig config;
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> magnitude;
  std::vector<double> phase;
  std::size_t signal_length = 0;  // samples in the analysed clip
  double sample_rate = 44100.0;

  Tensor<double> magnitude_tensor() const;
  /// Replaces the magnitude plane; shape must be frames x bins and values >= 0.
  void set_magnitude(const Tensor<double>& mag);
};

/// Frames for a clip of `length` samples after centring:
/// 1 + (length + 2*(window_len/2) - window_len) / hop.
std::size_t frame_count(std::size_t length, const StftConfig& cfg);

/// Centred STFT: the clip is reflect-padded by window_len/2 on both sides so
/// frame t is centred on sample t*hop. Requires length >= window_len.
Spectrogram stft(const AudioClip& clip, const StftConfig& cfg = {});

/// Weighted overlap-add inverse of stft(); output has signal_length samples.
AudioClip istft(const Spectrogram& spec);

/// One training example: (T+L) x F mixture context and the T x F target.
struct SegmentPair {
  Tensor<double> mixture_in;
  Tensor<double> target;
};

/// Number of segments B = ceil(M / T).
std::size_t segment_count(std::size_t frames, std::size_t T);

/// Segment b reads track frames [b*T - L/2, b*T + T + L - L/2) with zeros
/// outside the track; its target is frames [b*T, b*T + T), zero-padded.
std::vector<SegmentPair> segment(const Tensor<double>& mix, const Tensor<double>& tgt,
                                 std::size_t T, std::size_t L);

/// Mixture inputs only, laid out as in segment().
std::vector<Tensor<double>> segment_inputs(const Tensor<double>& mix, std::size_t T,
                                           std::size_t L);

/// Concatenates T x F blocks in order and keeps the first `frames` rows.
Tensor<double> stitch(const std::vector<Tensor<double>>& blocks, std::size_t frames);

/// Lowest n bands of every frame (last axis).
Tensor<double> trim_bands(const Tensor<double>& v, std::size_t n);

}  // namespace madsep::signal
