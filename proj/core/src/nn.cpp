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

#include "madsep/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace madsep::nn {

std::size_t count_trainable(const ParamSpecs& specs) {
  std::size_t n = 0;
  for (const ParamSpec& s : specs) {
    if (!s.buffer) n += shape_size(s.shape);
  }
  return n;
}

template <typename T>
std::size_t LayerParams<T>::count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params) n += t.size();
  return n;
}

template <typename T>
const Tensor<T>& LayerParams<T>::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

template <typename T>
Tensor<T>& LayerParams<T>::param(const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

template <typename T>
Tensor<T>& LayerParams<T>::buffer(const std::string& name) {
  auto it = buffers.find(name);
  if (it == buffers.end()) throw std::out_of_range("unknown buffer '" + name + "'");
  return it->second;
}

template <typename T>
LayerParams<T> LayerParams<T>::create(const ParamSpecs& specs, Rng& rng) {
  LayerParams<T> out;
  for (const ParamSpec& s : specs) {
    Tensor<T> t(s.shape);
    for (T& v : t.data()) {
      v = s.init.kind == Init::Kind::kUniform
              ? static_cast<T>(rng.uniform(-s.init.bound, s.init.bound))
              : static_cast<T>(s.init.value);
    }
    auto& dst = s.buffer ? out.buffers : out.params;
    if (!dst.emplace(s.name, std::move(t)).second) {
      throw std::invalid_argument("duplicate parameter name '" + s.name + "'");
    }
  }
  return out;
}

template <typename T>
Var<T> Binding<T>::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Var<T> v = tape_->leaf(store_->param(name), trainable_);
  bound_.emplace(name, v);
  return v;
}

template <typename T>
std::map<std::string, Tensor<T>> Binding<T>::grads() const {
  std::map<std::string, Tensor<T>> out;
  for (const auto& [name, v] : bound_) out.emplace(name, v.grad());
  return out;
}

// ---------------------------------------------------------------------------

ParamSpecs linear_spec(const std::string& prefix, std::size_t in, std::size_t out) {
  const double b = 1.0 / std::sqrt(static_cast<double>(in));
  return {{prefix + ".weight", {out, in}, Init::uniform(b)},
          {prefix + ".bias", {out}, Init::uniform(b)}};
}

ParamSpecs gru_spec(const std::string& prefix, std::size_t input, std::size_t hidden) {
  const double b = 1.0 / std::sqrt(static_cast<double>(hidden));
  return {{prefix + ".w_ih", {3 * hidden, input}, Init::uniform(b)},
          {prefix + ".w_hh", {3 * hidden, hidden}, Init::uniform(b)},
          {prefix + ".b_ih", {3 * hidden}, Init::uniform(b)},
          {prefix + ".b_hh", {3 * hidden}, Init::uniform(b)}};
}

ParamSpecs depthwise_spec(const std::string& prefix, std::size_t channels,
                          std::size_t kh, std::size_t kw) {
  const double b = 1.0 / std::sqrt(static_cast<double>(kh * kw));
  return {{prefix + ".weight", {channels, kh, kw}, Init::uniform(b)},
          {prefix + ".bias", {channels}, Init::uniform(b)}};
}

ParamSpecs pointwise_spec(const std::string& prefix, std::size_t in, std::size_t out) {
  const double b = 1.0 / std::sqrt(static_cast<double>(in));
  return {{prefix + ".weight", {out, in}, Init::uniform(b)},
          {prefix + ".bias", {out}, Init::uniform(b)}};
}

ParamSpecs transposed_conv_spec(const std::string& prefix, std::size_t in,
                                std::size_t out, std::size_t kh, std::size_t kw) {
  const double b = 1.0 / std::sqrt(static_cast<double>(out * kh * kw));
  return {{prefix + ".weight", {in, out, kh, kw}, Init::uniform(b)},
          {prefix + ".bias", {out}, Init::uniform(b)}};
}

ParamSpecs batch_norm_spec(const std::string& prefix, std::size_t channels) {
  return {{prefix + ".gamma", {channels}, Init::constant(1.0)},
          {prefix + ".beta", {channels}, Init::constant(0.0)},
          {prefix + ".running_mean", {channels}, Init::constant(0.0), true},
          {prefix + ".running_var", {channels}, Init::constant(1.0), true}};
}

void DwsBlockConfig::validate() const {
  if (in_channels < 1 || out_channels < 1) {
    throw std::invalid_argument("DWS block: channel counts must be >= 1");
  }
  if (kernel_h < 1 || kernel_w < 1) {
    throw std::invalid_argument("DWS block: kernel extents must be >= 1");
  }
  if (same_pad && (kernel_h % 2 == 0 || kernel_w % 2 == 0)) {
    throw std::invalid_argument("DWS block: same padding needs odd kernel extents");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("DWS block: leaky ReLU slope must lie in (0, 1)");
  }
}

ParamSpecs dws_block_spec(const std::string& prefix, const DwsBlockConfig& cfg) {
  cfg.validate();
  ParamSpecs out = depthwise_spec(prefix + ".depthwise", cfg.in_channels,
                                  cfg.kernel_h, cfg.kernel_w);
  for (auto& s : batch_norm_spec(prefix + ".bn", cfg.in_channels)) out.push_back(s);
  for (auto& s : pointwise_spec(prefix + ".pointwise", cfg.in_channels, cfg.out_channels))
    out.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------

template <typename T>
Var<T> linear(const Var<T>& x, Binding<T>& p, const std::string& prefix) {
  const Var<T> w = p(prefix + ".weight");
  const Var<T> b = p(prefix + ".bias");
  const Shape in_shape = x.shape();
  if (in_shape.empty() || in_shape.back() != w.shape()[1]) {
    throw ShapeError("linear '" + prefix + "': input " + shape_str(in_shape) +
                     " does not end in " + std::to_string(w.shape()[1]) + " features");
  }
  const std::size_t d_in = in_shape.back();
  const std::size_t rows = shape_size(in_shape) / d_in;
  Var<T> flat = in_shape.size() == 2 ? x : ops::reshape(x, {rows, d_in});
  Var<T> y = ops::add_bias(ops::matmul(flat, ops::transpose(w)), b, 1);
  if (in_shape.size() == 2) return y;
  Shape out_shape = in_shape;
  out_shape.back() = w.shape()[0];
  return ops::reshape(y, out_shape);
}

namespace {

// Frame-wise x W^T + b for x of any rank, result flattened to 2D.
template <typename T>
Var<T> linear_projection(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  const std::size_t d_in = x.shape().back();
  const Var<T> flat = ops::reshape(x, {x.value().size() / d_in, d_in});
  return ops::add_bias(ops::matmul(flat, ops::transpose(w)), b, 1);
}

// Gate update given precomputed input projections gi = x W_ih^T + b_ih.
template <typename T>
Var<T> gru_step(const Var<T>& gi, const Var<T>& h, const Var<T>& w_hh,
                const Var<T>& b_hh, std::size_t hidden) {
  const Var<T> gh = ops::add_bias(ops::matmul(h, ops::transpose(w_hh)), b_hh, 1);
  const Var<T> r = ops::sigmoid(ops::slice(gi, 1, 0, hidden) + ops::slice(gh, 1, 0, hidden));
  const Var<T> z = ops::sigmoid(ops::slice(gi, 1, hidden, 2 * hidden) +
                                ops::slice(gh, 1, hidden, 2 * hidden));
  const Var<T> n = ops::tanh(ops::slice(gi, 1, 2 * hidden, 3 * hidden) +
                             r * ops::slice(gh, 1, 2 * hidden, 3 * hidden));
  // (1 - z) * n + z * h == n + z * (h - n)
  return n + z * (h - n);
}

}  // namespace

template <typename T>
Var<T> gru_cell(const Var<T>& x, const Var<T>& h_prev, Binding<T>& p,
                const std::string& prefix) {
  const Var<T> w_ih = p(prefix + ".w_ih");
  const Var<T> w_hh = p(prefix + ".w_hh");
  const std::size_t hidden = w_hh.shape()[1];
  if (x.value().rank() != 2 || x.shape()[1] != w_ih.shape()[1] ||
      h_prev.value().rank() != 2 || h_prev.shape()[1] != hidden ||
      h_prev.shape()[0] != x.shape()[0]) {
    throw ShapeError("gru_cell '" + prefix + "': x " + shape_str(x.shape()) + ", h " +
                     shape_str(h_prev.shape()) + " do not fit w_ih " +
                     shape_str(w_ih.shape()));
  }
  const Var<T> gi =
      ops::add_bias(ops::matmul(x, ops::transpose(w_ih)), p(prefix + ".b_ih"), 1);
  return gru_step(gi, h_prev, w_hh, p(prefix + ".b_hh"), hidden);
}

template <typename T>
Var<T> gru_sequence(const Var<T>& x, Binding<T>& p, const std::string& prefix) {
  const Var<T> w_ih = p(prefix + ".w_ih");
  const Var<T> w_hh = p(prefix + ".w_hh");
  const Var<T> b_hh = p(prefix + ".b_hh");
  const std::size_t hidden = w_hh.shape()[1];
  if (x.value().rank() != 3 || x.shape()[2] != w_ih.shape()[1]) {
    throw ShapeError("gru_sequence '" + prefix + "': input " + shape_str(x.shape()) +
                     " does not fit w_ih " + shape_str(w_ih.shape()));
  }
  const std::size_t batch = x.shape()[0], steps = x.shape()[1];
  // Input projections for all frames in one product.
  const Var<T> gi_all = ops::reshape(linear_projection(x, w_ih, p(prefix + ".b_ih")),
                                     {batch, steps, 3 * hidden});
  Var<T> h = p.tape().constant(Tensor<T>(Shape{batch, hidden}));
  std::vector<Var<T>> states;
  states.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const Var<T> gi = ops::reshape(ops::slice(gi_all, 1, t, t + 1), {batch, 3 * hidden});
    h = gru_step(gi, h, w_hh, b_hh, hidden);
    states.push_back(ops::reshape(h, {batch, 1, hidden}));
  }
  return ops::concat(states, 1);
}

template <typename T>
Var<T> depthwise_conv(const Var<T>& x, Binding<T>& p, const std::string& prefix,
                      std::size_t pad_h, std::size_t pad_w) {
  return ops::add_bias(ops::depthwise_conv2d(x, p(prefix + ".weight"), pad_h, pad_w),
                       p(prefix + ".bias"), 1);
}

template <typename T>
Var<T> pointwise_conv(const Var<T>& x, Binding<T>& p, const std::string& prefix) {
  return ops::add_bias(ops::pointwise_conv2d(x, p(prefix + ".weight")),
                       p(prefix + ".bias"), 1);
}

template <typename T>
Var<T> transposed_conv(const Var<T>& x, Binding<T>& p, const std::string& prefix,
                       const ops::Conv2dOptions& opt) {
  return ops::add_bias(ops::conv_transpose2d(x, p(prefix + ".weight"), opt),
                       p(prefix + ".bias"), 1);
}

template <typename T>
Var<T> batch_norm(const Var<T>& x, Binding<T>& p, const std::string& prefix,
                  Mode mode) {
  const Var<T> gamma = p(prefix + ".gamma");
  const Var<T> beta = p(prefix + ".beta");
  Tensor<T>& run_mean = p.store().buffer(prefix + ".running_mean");
  Tensor<T>& run_var = p.store().buffer(prefix + ".running_var");
  const T eps = static_cast<T>(kBatchNormEps);
  if (mode == Mode::kEval) {
    return ops::batch_norm_eval(x, gamma, beta, run_mean.values(), run_var.values(), eps);
  }
  ops::BatchStats<T> stats;
  Var<T> y = ops::batch_norm_train(x, gamma, beta, eps, &stats);
  const std::size_t m = x.value().size() / x.shape()[1];
  const T mom = static_cast<T>(kBatchNormMomentum);
  const T unbias = static_cast<T>(m) / static_cast<T>(m - 1);
  for (std::size_t c = 0; c < stats.mean.size(); ++c) {
    run_mean[c] = (T{1} - mom) * run_mean[c] + mom * stats.mean[c];
    run_var[c] = (T{1} - mom) * run_var[c] + mom * stats.var[c] * unbias;
  }
  return y;
}

template <typename T>
Var<T> dws_block(const Var<T>& x, const DwsBlockConfig& cfg, Binding<T>& p,
                 const std::string& prefix, Mode mode) {
  cfg.validate();
  if (x.value().rank() != 4 || x.shape()[1] != cfg.in_channels) {
    throw ShapeError("dws_block '" + prefix + "': input " + shape_str(x.shape()) +
                     " does not have " + std::to_string(cfg.in_channels) + " channels");
  }
  const std::size_t ph = cfg.same_pad ? cfg.kernel_h / 2 : 0;
  const std::size_t pw = cfg.same_pad ? cfg.kernel_w / 2 : 0;
  Var<T> h = depthwise_conv(x, p, prefix + ".depthwise", ph, pw);
  h = ops::lrelu(h, static_cast<T>(cfg.beta));
  h = batch_norm(h, p, prefix + ".bn", mode);
  h = pointwise_conv(h, p, prefix + ".pointwise");
  return ops::relu(h);
}

template <typename T>
Var<T> dropout(const Var<T>& x, double p, Mode mode, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw std::invalid_argument("dropout: probability must lie in [0, 1), got " +
                                std::to_string(p));
  }
  if (mode == Mode::kEval || p == 0.0) return x;
  Tensor<T> mask(x.shape());
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  for (T& m : mask.data()) m = rng.bernoulli(p) ? T{0} : keep_scale;
  return x * x.tape().constant(std::move(mask));
}

#define MADSEP_INSTANTIATE_NN(T)                                                      \
  template struct LayerParams<T>;                                                    \
  template class Binding<T>;                                                         \
  template Var<T> linear(const Var<T>&, Binding<T>&, const std::string&);            \
  template Var<T> gru_cell(const Var<T>&, const Var<T>&, Binding<T>&,                \
                           const std::string&);                                      \
  template Var<T> gru_sequence(const Var<T>&, Binding<T>&, const std::string&);      \
  template Var<T> depthwise_conv(const Var<T>&, Binding<T>&, const std::string&,     \
                                 std::size_t, std::size_t);                          \
  template Var<T> pointwise_conv(const Var<T>&, Binding<T>&, const std::string&);    \
  template Var<T> transposed_conv(const Var<T>&, Binding<T>&, const std::string&,    \
                                  const ops::Conv2dOptions&);                        \
  template Var<T> batch_norm(const Var<T>&, Binding<T>&, const std::string&, Mode);  \
  template Var<T> dws_block(const Var<T>&, const DwsBlockConfig&, Binding<T>&,       \
                            const std::string&, Mode);                               \
  template Var<T> dropout(const Var<T>&, double, Mode, Rng&);

MADSEP_INSTANTIATE_NN(float)
MADSEP_INSTANTIATE_NN(double)

#undef MADSEP_INSTANTIATE_NN

}  // namespace madsep::nn
