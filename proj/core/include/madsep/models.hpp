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
#include <string>

#include "madsep/nn.hpp"
#include "madsep/rng.hpp"
#include "madsep/tape.hpp"

namespace madsep::models {

using nn::Mode;

enum class Variant { kRnn, kDwsCnn };

std::string to_string(Variant v);
/// Accepts "rnn" and "dws-cnn"; throws std::invalid_argument otherwise.
Variant parse_variant(const std::string& s);

struct MaskerConfig {
  Variant variant = Variant::kRnn;
  std::size_t F = 2049;     // frequency bands of the magnitude spectrogram
  std::size_t N_tr = 744;   // bands kept by the recurrent encoder
  std::size_t T = 60;       // output frames per sequence
  std::size_t L = 10;       // context frames, split evenly before and after
  std::size_t L_enc = 7;    // encoder DWS blocks after the first one
  std::size_t C_o = 256;    // channels of the convolutional masker
  double p_enc = 0.25;
  double p_dec = 0.25;
  std::size_t pool_h = 1;
  std::size_t pool_w = 2;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// Small configuration used by gradient checks and quick experiments.
  static MaskerConfig tiny(Variant v);
};

/// Width of the convolutional feature maps after both frequency poolings.
std::size_t cnn_pooled_width(const MaskerConfig& cfg);

nn::ParamSpecs masker_spec(const MaskerConfig& cfg);
nn::ParamSpecs denoiser_spec(std::size_t F);

struct ParamCounts {
  std::size_t masker = 0;
  std::size_t denoiser = 0;
  std::size_t total = 0;
};

/// Trainable scalars only; batch-norm running statistics are excluded.
ParamCounts count_params(const MaskerConfig& cfg);

/// Names of the two matrices penalised by the training objective.
inline const std::string kMaskerOutputWeight = "fnn_m.weight";
inline const std::string kDenoiserOutputWeight = "fnn_d2.weight";

template <typename T>
struct ModelParams {
  nn::LayerParams<T> masker;
  nn::LayerParams<T> denoiser;

  static ModelParams create(const MaskerConfig& cfg, Rng& rng);
  std::size_t count() const { return masker.count() + denoiser.count(); }
};

/// All tensors are batched: [B, T, F].
template <typename T>
struct MaskerOutput {
  Var<T> mask;       // H_m
  Var<T> estimate;   // trimmed mixture times mask
  Var<T> trimmed;    // central T frames of the input
};

template <typename T>
struct MadOutput {
  MaskerOutput<T> masker;
  Var<T> denoised;
};

/// Keeps frames [L/2, L/2 + T) of a [B, T + L, ...] sequence.
template <typename T>
Var<T> temporal_trim(const Var<T>& x, std::size_t T_out, std::size_t L);

/// Bidirectional encoder output with residual connection, [B, T + L, 2 N_tr].
/// The backward half stays in reversed time order.
template <typename T>
Var<T> rnn_encoder(const Var<T>& v, const MaskerConfig& cfg, nn::Binding<T>& p);

template <typename T>
MaskerOutput<T> rnn_masker_forward(const Var<T>& v, const MaskerConfig& cfg,
                                   nn::Binding<T>& p);

template <typename T>
MaskerOutput<T> cnn_masker_forward(const Var<T>& v, const MaskerConfig& cfg,
                                   nn::Binding<T>& p, Mode mode, Rng& rng);

/// Dispatches on cfg.variant. v is [B, T + L, F] and nonnegative.
template <typename T>
MaskerOutput<T> masker_forward(const Var<T>& v, const MaskerConfig& cfg, nn::Binding<T>& p,
                               Mode mode, Rng& rng);

/// Two per-frame ReLU layers F -> F/2 -> F whose output multiplies the input.
template <typename T>
Var<T> denoiser_forward(const Var<T>& est, nn::Binding<T>& p);

template <typename T>
MadOutput<T> mad_forward(const Var<T>& v, const MaskerConfig& cfg, nn::Binding<T>& masker,
                         nn::Binding<T>& denoiser, Mode mode, Rng& rng);

}  // namespace madsep::models
