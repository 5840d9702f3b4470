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
#include <vector>

#include "madsep/tape.hpp"
#include "madsep/tensor.hpp"

// Differentiable primitives. Every function reads its inputs, never mutates
// them, and appends one node to the tape the inputs live on.
namespace madsep::ops {

// Elementwise arithmetic. Binary ops require identical shapes.
template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& a, T factor);
template <typename T> Var<T> add_scalar(const Var<T>& a, T offset);

/// Adds a rank-1 bias along `axis` (bias length == a.dim(axis)).
template <typename T>
Var<T> add_bias(const Var<T>& a, const Var<T>& bias, std::size_t axis);

// Elementwise functions.
template <typename T> Var<T> exp(const Var<T>& a);
/// Natural log; throws NumericError on any entry <= 0.
template <typename T> Var<T> log(const Var<T>& a);
template <typename T> Var<T> sqrt(const Var<T>& a);
template <typename T> Var<T> abs(const Var<T>& a);
template <typename T> Var<T> square(const Var<T>& a);
template <typename T> Var<T> sigmoid(const Var<T>& a);
template <typename T> Var<T> tanh(const Var<T>& a);
template <typename T> Var<T> relu(const Var<T>& a);
/// x for x >= 0, beta * x otherwise.
template <typename T> Var<T> lrelu(const Var<T>& a, T beta);

// Shape manipulation.
template <typename T> Var<T> matmul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> transpose(const Var<T>& a);
template <typename T> Var<T> reshape(const Var<T>& a, Shape shape);
template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis);
template <typename T>
Var<T> slice(const Var<T>& a, std::size_t axis, std::size_t begin,
             std::size_t end);
template <typename T> Var<T> flip(const Var<T>& a, std::size_t axis);
/// Main diagonal (i, i), i < min(rows, cols), of a matrix.
template <typename T> Var<T> diag(const Var<T>& a);

// Reductions. The axis variants drop the reduced axis.
template <typename T> Var<T> sum(const Var<T>& a);
template <typename T> Var<T> sum(const Var<T>& a, std::size_t axis);
template <typename T> Var<T> mean(const Var<T>& a, std::size_t axis);
/// Maximum along an axis; the gradient goes to the first maximal entry.
template <typename T> Var<T> max(const Var<T>& a, std::size_t axis);

struct Conv2dOptions {
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
  /// Extra rows/cols appended to a transposed convolution output.
  std::size_t output_pad_h = 0;
  std::size_t output_pad_w = 0;
};

// Convolutions on N x C x H x W tensors. All are cross-correlations.

/// Dense convolution, weight [C_o, C_i, K_h, K_w].
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Conv2dOptions& opt);
/// One K_h x K_w filter per channel, weight [C, K_h, K_w], unit stride.
template <typename T>
Var<T> depthwise_conv2d(const Var<T>& x, const Var<T>& weight,
                        std::size_t pad_h, std::size_t pad_w);
/// 1x1 cross-channel mixing, weight [C_o, C_i].
template <typename T>
Var<T> pointwise_conv2d(const Var<T>& x, const Var<T>& weight);
/// Adjoint of conv2d, weight [C_i, C_o, K_h, K_w].
template <typename T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& weight,
                        const Conv2dOptions& opt);
/// Non-overlapping max pooling; H and W must be divisible by the extents.
template <typename T>
Var<T> max_pool2d(const Var<T>& x, std::size_t pool_h, std::size_t pool_w);

template <typename T>
struct BatchStats {
  std::vector<T> mean;
  std::vector<T> var;  // biased (population) variance
};

/// Batch normalisation over every axis except axis 1, using the statistics
/// of `x` itself. The computed statistics are written to `stats` if given.
template <typename T>
Var<T> batch_norm_train(const Var<T>& x, const Var<T>& gamma,
                        const Var<T>& beta, T eps,
                        BatchStats<T>* stats = nullptr);
/// Batch normalisation with fixed statistics.
template <typename T>
Var<T> batch_norm_eval(const Var<T>& x, const Var<T>& gamma,
                       const Var<T>& beta, const std::vector<T>& mean,
                       const std::vector<T>& var, T eps);

}  // namespace madsep::ops

namespace madsep {

template <typename T>
Var<T> operator+(const Var<T>& a, const Var<T>& b) {
  return ops::add(a, b);
}
template <typename T>
Var<T> operator-(const Var<T>& a, const Var<T>& b) {
  return ops::sub(a, b);
}
/// Hadamard product.
template <typename T>
Var<T> operator*(const Var<T>& a, const Var<T>& b) {
  return ops::mul(a, b);
}

}  // namespace madsep
