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
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "madsep/models.hpp"
#include "madsep/signal.hpp"
#include "madsep/tape.hpp"

namespace madsep::training {

struct LossConfig {
  double lambda1 = 1e-2;  // weight of the masker diagonal penalty
  double lambda2 = 1e-4;  // weight of the denoiser output-layer penalty
  double eps = 1e-12;     // keeps the logarithm finite at zero

  void validate() const;
};

/// Generalised Kullback-Leibler divergence
///   sum_ij x log((x + eps) / (y + eps)) - x + y
/// with the reference x fixed and the estimate y on the tape.
/// Throws std::invalid_argument on a shape mismatch or a negative entry.
template <typename T>
Var<T> gkl(const Tensor<T>& x, const Var<T>& y, double eps = 1e-12);

/// Same divergence on plain tensors, accumulated in double.
template <typename T>
double gkl(const Tensor<T>& x, const Tensor<T>& y, double eps = 1e-12);

/// Scalar values of the four loss terms, for logging and diagnostics.
struct LossTerms {
  double masker_gkl = 0.0;
  double denoiser_gkl = 0.0;
  double diag_penalty = 0.0;   // lambda1 * sum_i |W_m[i, i]|
  double weight_penalty = 0.0; // lambda2 * ||W_d2||_F^2
  double total() const { return masker_gkl + denoiser_gkl + diag_penalty + weight_penalty; }
};

template <typename T>
struct Loss {
  Var<T> value;
  LossTerms terms;
};

/// Two-stage objective on a batch. `target`, `masker_estimate` and
/// `denoised` share one shape; the divergences are summed over every
/// element and the penalties are added once per call.
template <typename T>
Loss<T> mad_loss(const Tensor<T>& target, const Var<T>& masker_estimate,
                 const Var<T>& denoised, const Var<T>& masker_weight,
                 const Var<T>& denoiser_weight, const LossConfig& cfg = {});

template <typename T>
using TensorMap = std::map<std::string, Tensor<T>>;

/// Global L2 norm over every tensor in the map.
template <typename T>
double global_norm(const TensorMap<T>& grads);

/// Rescales all gradients by max_norm / norm when the global norm exceeds
/// max_norm. Returns the norm measured before clipping.
template <typename T>
double clip_grad_norm(TensorMap<T>& grads, double max_norm = 0.5);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam:
///   m <- b1 m + (1 - b1) g,   v <- b2 v + (1 - b2) g^2
///   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// Moment buffers are created on first sight of a key and kept in double.
template <typename T>
class Adam {
 public:
  /// Parameters and gradients of one network stage. Moment buffers are
  /// keyed by prefix + name, so stages sharing a name stay separate.
  struct Group {
    std::string prefix;
    TensorMap<T>* params = nullptr;
    const TensorMap<T>* grads = nullptr;
  };

  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// One optimiser step over all groups. Parameters without a gradient are
  /// left untouched. Throws std::invalid_argument for a gradient whose
  /// parameter is missing or shaped differently.
  void step(const std::vector<Group>& groups);
  void step(TensorMap<T>& params, const TensorMap<T>& grads) {
    step({Group{"", &params, &grads}});
  }

  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const std::map<std::string, std::vector<double>>& first_moments() const { return m_; }
  const std::map<std::string, std::vector<double>>& second_moments() const { return v_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::map<std::string, std::vector<double>> m_, v_;
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch = 4;
  std::uint64_t seed = 0;
  double clip_norm = 0.5;
  AdamConfig adam;
  LossConfig loss;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;   // 1-based
  double loss = 0.0;       // mean batch loss over the epoch
  double grad_norm = 0.0;  // mean pre-clipping gradient norm
  double wall_ms = 0.0;
  std::size_t batches = 0;
};

/// Raised when the objective stops being finite. The message names the
/// epoch, the batch and the last finite term values.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Called after each epoch; returning false stops training early.
using EpochCallback = std::function<bool(const EpochRecord&)>;

/// Mini-batch training of masker and denoiser together. Each epoch visits
/// the dataset in a seeded random order, keeps the last partial batch, and
/// applies forward, loss, backward, clipping and one Adam step per batch.
/// Parameters and batch-norm buffers in `model` are updated in place.
template <typename T>
std::vector<EpochRecord> train(models::ModelParams<T>& model, const models::MaskerConfig& cfg,
                               const std::vector<signal::SegmentPair>& dataset,
                               const TrainConfig& tc, const EpochCallback& on_epoch = {});

/// A synthetic track: mixture == voice + accompaniment sample by sample.
struct SyntheticTrack {
  signal::AudioClip mixture;
  signal::AudioClip voice;
  signal::AudioClip accompaniment;
};

/// Lowest and highest frequency reserved for each source. The voice
/// occupies [kVoiceLowHz, kVoiceHighHz]; the accompaniment holds tones
/// below kVoiceLowHz and band-limited noise in [kNoiseLowHz, kNoiseHighHz].
inline constexpr double kVoiceLowHz = 250.0;
inline constexpr double kVoiceHighHz = 4000.0;
inline constexpr double kNoiseLowHz = 6000.0;
inline constexpr double kNoiseHighHz = 10000.0;

/// Desk-scale stand-in for a music corpus. The voice is a sequence of
/// harmonic notes with vibrato and attack/release envelopes. Every source
/// sample is a multiple of 2^-15, so the mixture is exact in both float
/// precisions and survives 16-bit WAV storage unchanged.
/// Throws std::invalid_argument when duration_s < 2.
std::vector<SyntheticTrack> make_synthetic_dataset(std::uint64_t seed, std::size_t n_tracks,
                                                   double duration_s,
                                                   double sample_rate = 44100.0);

}  // namespace madsep::training
