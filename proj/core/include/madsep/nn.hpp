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
#include <map>
#include <string>
#include <vector>

#include "madsep/ops.hpp"
#include "madsep/rng.hpp"
#include "madsep/tape.hpp"
#include "madsep/tensor.hpp"

namespace madsep::nn {

enum class Mode { kTrain, kEval };

/// How a parameter tensor is filled at construction.
struct Init {
  enum class Kind { kUniform, kConstant };
  Kind kind = Kind::kConstant;
  double bound = 0.0;  // uniform in [-bound, bound]
  double value = 0.0;  // constant fill

  static Init uniform(double bound) { return {Kind::kUniform, bound, 0.0}; }
  static Init constant(double value) { return {Kind::kConstant, 0.0, value}; }
};

/// Declares one named tensor of a layer. Buffers (batch-norm running
/// statistics) are stored and checkpointed but not trained or counted.
struct ParamSpec {
  std::string name;
  Shape shape;
  Init init;
  bool buffer = false;
};

using ParamSpecs = std::vector<ParamSpec>;

/// Named parameter store for a network stage.
template <typename T>
struct LayerParams {
  std::map<std::string, Tensor<T>> params;
  std::map<std::string, Tensor<T>> buffers;

  /// Trainable scalar count.
  std::size_t count() const;
  const Tensor<T>& param(const std::string& name) const;
  Tensor<T>& param(const std::string& name);
  Tensor<T>& buffer(const std::string& name);

  /// Allocates and initialises every tensor listed in `specs`.
  static LayerParams create(const ParamSpecs& specs, Rng& rng);
};

std::size_t count_trainable(const ParamSpecs& specs);

/// Binds a parameter store onto a tape for one forward pass. Parameters
/// become leaves on first use; with `trainable` they collect gradients.
template <typename T>
class Binding {
 public:
  Binding(Tape<T>& tape, LayerParams<T>& store, bool trainable)
      : tape_(&tape), store_(&store), trainable_(trainable) {}

  Var<T> operator()(const std::string& name);
  /// Uses an existing tape value for `name` instead of a fresh leaf.
  void set(const std::string& name, Var<T> v) { bound_.insert_or_assign(name, v); }
  Tape<T>& tape() const { return *tape_; }
  LayerParams<T>& store() const { return *store_; }
  bool trainable() const { return trainable_; }

  /// Gradients of every bound parameter after Tape::backward.
  std::map<std::string, Tensor<T>> grads() const;

 private:
  Tape<T>* tape_;
  LayerParams<T>* store_;
  bool trainable_;
  std::map<std::string, Var<T>> bound_;
};

// ---------------------------------------------------------------------------
// Parameter declarations. Counts follow directly from the shapes.

/// weight [out, in] and bias [out]: in*out + out scalars.
ParamSpecs linear_spec(const std::string& prefix, std::size_t in, std::size_t out);
/// w_ih [3H, I], w_hh [3H, H], b_ih [3H], b_hh [3H]: 3IH + 3H^2 + 6H scalars.
ParamSpecs gru_spec(const std::string& prefix, std::size_t input, std::size_t hidden);
/// weight [C, K_h, K_w] and bias [C]: C*K_h*K_w + C scalars.
ParamSpecs depthwise_spec(const std::string& prefix, std::size_t channels,
                          std::size_t kh, std::size_t kw);
/// weight [C_o, C_i] and bias [C_o]: C_i*C_o + C_o scalars.
ParamSpecs pointwise_spec(const std::string& prefix, std::size_t in, std::size_t out);
/// weight [C_i, C_o, K_h, K_w] and bias [C_o].
ParamSpecs transposed_conv_spec(const std::string& prefix, std::size_t in,
                                std::size_t out, std::size_t kh, std::size_t kw);
/// gamma, beta (trainable) plus running_mean, running_var buffers.
ParamSpecs batch_norm_spec(const std::string& prefix, std::size_t channels);

struct DwsBlockConfig {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 5;
  std::size_t kernel_w = 5;
  double beta = 1e-2;  // negative slope of the leaky ReLU
  bool same_pad = true;

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

ParamSpecs dws_block_spec(const std::string& prefix, const DwsBlockConfig& cfg);

// ---------------------------------------------------------------------------
// Layers. Feature-map tensors are N x C x H x W.

/// y = x W^T + b over the last axis; leading axes are independent frames.
template <typename T>
Var<T> linear(const Var<T>& x, Binding<T>& p, const std::string& prefix);

/// One GRU update for a batch x [B, I], h_prev [B, H]:
///   r = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
///   z = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
///   n = tanh(W_in x + b_in + r * (W_hn h + b_hn))
///   h' = (1 - z) * n + z * h
template <typename T>
Var<T> gru_cell(const Var<T>& x, const Var<T>& h_prev, Binding<T>& p,
                const std::string& prefix);

/// Runs a GRU over x [B, S, I] from a zero state; returns all states
/// [B, S, H] in processing order.
template <typename T>
Var<T> gru_sequence(const Var<T>& x, Binding<T>& p, const std::string& prefix);

template <typename T>
Var<T> depthwise_conv(const Var<T>& x, Binding<T>& p, const std::string& prefix,
                      std::size_t pad_h, std::size_t pad_w);

template <typename T>
Var<T> pointwise_conv(const Var<T>& x, Binding<T>& p, const std::string& prefix);

/// Transposed convolution with bias. With unit stride, padding (K-1)/2 keeps
/// the spatial size.
template <typename T>
Var<T> transposed_conv(const Var<T>& x, Binding<T>& p, const std::string& prefix,
                       const ops::Conv2dOptions& opt);

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Per-channel normalisation over batch and spatial axes. Train mode uses
/// batch statistics and updates the running buffers; eval mode uses the
/// running buffers.
template <typename T>
Var<T> batch_norm(const Var<T>& x, Binding<T>& p, const std::string& prefix,
                  Mode mode);

/// ReLU(pointwise(BN(LReLU(depthwise(x))))).
template <typename T>
Var<T> dws_block(const Var<T>& x, const DwsBlockConfig& cfg, Binding<T>& p,
                 const std::string& prefix, Mode mode);

template <typename T>
Var<T> max_pool(const Var<T>& x, std::size_t pool_h, std::size_t pool_w) {
  return ops::max_pool2d(x, pool_h, pool_w);
}

/// Inverted dropout: in train mode zeroes entries with probability p and
/// scales survivors by 1/(1-p); identity in eval mode.
template <typename T>
Var<T> dropout(const Var<T>& x, double p, Mode mode, Rng& rng);

template <typename T>
Var<T> relu(const Var<T>& x) {
  return ops::relu(x);
}

template <typename T>
Var<T> lrelu(const Var<T>& x, T beta) {
  return ops::lrelu(x, beta);
}

}  // namespace madsep::nn
