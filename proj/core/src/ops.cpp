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

#include "madsep/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>

namespace madsep {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace madsep

namespace madsep::ops {
namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const MatRM<T>>;
template <typename T>
using Map = Eigen::Map<MatRM<T>>;

[[noreturn]] void shape_fail(const std::string& op, const std::string& what) {
  throw ShapeError(op + ": " + what);
}

template <typename T>
Tape<T>& tape_of(const Var<T>& a, const Var<T>& b, const char* op) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    shape_fail(op, "operands live on different tapes");
  }
  return a.tape();
}

template <typename T>
void require_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    shape_fail(op, "shape mismatch " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
  }
}

template <typename T>
void require_rank(const Var<T>& a, std::size_t rank, const char* op) {
  if (a.value().rank() != rank) {
    shape_fail(op, "expected rank " + std::to_string(rank) + ", got " +
                       shape_str(a.shape()));
  }
}

// Splits a shape around `axis` into (outer, extent, inner) blocks.
struct AxisView {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size()) {
    shape_fail(op, "axis " + std::to_string(axis) + " out of range for " +
                       shape_str(s));
  }
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  v.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

template <typename T, typename F, typename D>
Var<T> unary(const Var<T>& a, const char* name, F&& f, D&& dfdx) {
  const Tensor<T>& x = a.value();
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const NodeId ia = a.id();
  return a.tape().record(
      name, std::move(y), {ia},
      [ia, dfdx](Tape<T>& t, const Tensor<T>& g) {
        const Tensor<T>& xv = t.value(ia);
        Tensor<T> gx(xv.shape());
        for (std::size_t i = 0; i < xv.size(); ++i) gx[i] = g[i] * dfdx(xv[i]);
        t.accumulate(ia, gx);
      });
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  Tape<T>& t = tape_of(a, b, "add");
  require_same_shape(a, b, "add");
  Tensor<T> y = a.value();
  auto yd = y.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] += bd[i];
  const NodeId ia = a.id(), ib = b.id();
  return t.record("add", std::move(y), {ia, ib},
                  [ia, ib](Tape<T>& tp, const Tensor<T>& g) {
                    tp.accumulate(ia, g);
                    tp.accumulate(ib, g);
                  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  Tape<T>& t = tape_of(a, b, "sub");
  require_same_shape(a, b, "sub");
  Tensor<T> y = a.value();
  auto yd = y.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] -= bd[i];
  const NodeId ia = a.id(), ib = b.id();
  return t.record("sub", std::move(y), {ia, ib},
                  [ia, ib](Tape<T>& tp, const Tensor<T>& g) {
                    tp.accumulate(ia, g);
                    if (tp.requires_grad(ib)) {
                      Tensor<T> gb(g.shape());
                      for (std::size_t i = 0; i < g.size(); ++i) gb[i] = -g[i];
                      tp.accumulate(ib, gb);
                    }
                  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  Tape<T>& t = tape_of(a, b, "mul");
  require_same_shape(a, b, "mul");
  Tensor<T> y = a.value();
  auto yd = y.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] *= bd[i];
  const NodeId ia = a.id(), ib = b.id();
  return t.record(
      "mul", std::move(y), {ia, ib}, [ia, ib](Tape<T>& tp, const Tensor<T>& g) {
        const Tensor<T>& av = tp.value(ia);
        const Tensor<T>& bv = tp.value(ib);
        if (tp.requires_grad(ia)) {
          Tensor<T> ga(g.shape());
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * bv[i];
          tp.accumulate(ia, ga);
        }
        if (tp.requires_grad(ib)) {
          Tensor<T> gb(g.shape());
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] = g[i] * av[i];
          tp.accumulate(ib, gb);
        }
      });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  return unary(
      a, "scale", [factor](T x) { return x * factor; },
      [factor](T) { return factor; });
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T offset) {
  return unary(
      a, "add_scalar", [offset](T x) { return x + offset; },
      [](T) { return T{1}; });
}

template <typename T>
Var<T> add_bias(const Var<T>& a, const Var<T>& bias, std::size_t axis) {
  Tape<T>& t = tape_of(a, bias, "add_bias");
  const AxisView v = axis_view(a.shape(), axis, "add_bias");
  if (bias.value().rank() != 1 || bias.value().size() != v.extent) {
    shape_fail("add_bias", "bias " + shape_str(bias.shape()) +
                               " does not match axis " + std::to_string(axis) +
                               " of " + shape_str(a.shape()));
  }
  Tensor<T> y = a.value();
  auto yd = y.data();
  auto bd = bias.value().data();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t k = 0; k < v.extent; ++k) {
      T* row = yd.data() + (o * v.extent + k) * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) row[i] += bd[k];
    }
  const NodeId ia = a.id(), ib = bias.id();
  return t.record("add_bias", std::move(y), {ia, ib},
                  [ia, ib, v](Tape<T>& tp, const Tensor<T>& g) {
                    tp.accumulate(ia, g);
                    if (!tp.requires_grad(ib)) return;
                    Tensor<T> gb(Shape{v.extent});
                    for (std::size_t o = 0; o < v.outer; ++o)
                      for (std::size_t k = 0; k < v.extent; ++k) {
                        const T* row = g.data().data() + (o * v.extent + k) * v.inner;
                        T s{0};
                        for (std::size_t i = 0; i < v.inner; ++i) s += row[i];
                        gb[k] += s;
                      }
                    tp.accumulate(ib, gb);
                  });
}

template <typename T>
Var<T> exp(const Var<T>& a) {
  return unary(
      a, "exp", [](T x) { return std::exp(x); }, [](T x) { return std::exp(x); });
}

template <typename T>
Var<T> log(const Var<T>& a) {
  for (T x : a.value().data()) {
    if (!(x > T{0})) {
      throw NumericError("log: non-positive argument " + std::to_string(x) +
                         " (shape " + shape_str(a.shape()) + ")");
    }
  }
  return unary(
      a, "log", [](T x) { return std::log(x); }, [](T x) { return T{1} / x; });
}

template <typename T>
Var<T> sqrt(const Var<T>& a) {
  for (T x : a.value().data()) {
    if (x < T{0}) throw NumericError("sqrt: negative argument");
  }
  return unary(
      a, "sqrt", [](T x) { return std::sqrt(x); },
      [](T x) { return T{0.5} / std::sqrt(x); });
}

template <typename T>
Var<T> abs(const Var<T>& a) {
  return unary(
      a, "abs", [](T x) { return std::abs(x); },
      [](T x) { return x > T{0} ? T{1} : (x < T{0} ? T{-1} : T{0}); });
}

template <typename T>
Var<T> square(const Var<T>& a) {
  return unary(
      a, "square", [](T x) { return x * x; }, [](T x) { return T{2} * x; });
}

template <typename T>
static T sigmoid_value(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
  return unary(
      a, "sigmoid", [](T x) { return sigmoid_value(x); },
      [](T x) {
        const T s = sigmoid_value(x);
        return s * (T{1} - s);
      });
}

template <typename T>
Var<T> tanh(const Var<T>& a) {
  return unary(
      a, "tanh", [](T x) { return std::tanh(x); },
      [](T x) {
        const T y = std::tanh(x);
        return T{1} - y * y;
      });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  return unary(
      a, "relu", [](T x) { return x > T{0} ? x : T{0}; },
      [](T x) { return x > T{0} ? T{1} : T{0}; });
}

template <typename T>
Var<T> lrelu(const Var<T>& a, T beta) {
  return unary(
      a, "lrelu", [beta](T x) { return x >= T{0} ? x : beta * x; },
      [beta](T x) { return x >= T{0} ? T{1} : beta; });
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  Tape<T>& t = tape_of(a, b, "matmul");
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    shape_fail("matmul", "inner dimensions differ: " + shape_str(a.shape()) +
                             " x " + shape_str(b.shape()));
  }
  Tensor<T> y(Shape{m, n});
  Map<T>(y.data().data(), m, n).noalias() =
      MapC<T>(a.value().data().data(), m, k) *
      MapC<T>(b.value().data().data(), k, n);
  const NodeId ia = a.id(), ib = b.id();
  return t.record(
      "matmul", std::move(y), {ia, ib},
      [ia, ib, m, k, n](Tape<T>& tp, const Tensor<T>& g) {
        MapC<T> G(g.data().data(), m, n);
        if (tp.requires_grad(ia)) {
          Tensor<T> ga(Shape{m, k});
          Map<T>(ga.data().data(), m, k).noalias() =
              G * MapC<T>(tp.value(ib).data().data(), k, n).transpose();
          tp.accumulate(ia, ga);
        }
        if (tp.requires_grad(ib)) {
          Tensor<T> gb(Shape{k, n});
          Map<T>(gb.data().data(), k, n).noalias() =
              MapC<T>(tp.value(ia).data().data(), m, k).transpose() * G;
          tp.accumulate(ib, gb);
        }
      });
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  Tensor<T> y(Shape{c, r});
  Map<T>(y.data().data(), c, r) = MapC<T>(a.value().data().data(), r, c).transpose();
  const NodeId ia = a.id();
  return a.tape().record("transpose", std::move(y), {ia},
                         [ia, r, c](Tape<T>& tp, const Tensor<T>& g) {
                           Tensor<T> ga(Shape{r, c});
                           Map<T>(ga.data().data(), r, c) =
                               MapC<T>(g.data().data(), c, r).transpose();
                           tp.accumulate(ia, ga);
                         });
}

template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  if (shape_size(shape) != a.value().size()) {
    shape_fail("reshape", "cannot reshape " + shape_str(a.shape()) + " to " +
                              shape_str(shape));
  }
  Tensor<T> y = a.value().reshaped(std::move(shape));
  const NodeId ia = a.id();
  const Shape in_shape = a.shape();
  return a.tape().record("reshape", std::move(y), {ia},
                         [ia, in_shape](Tape<T>& tp, const Tensor<T>& g) {
                           tp.accumulate(ia, g.reshaped(in_shape));
                         });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis) {
  if (parts.empty()) shape_fail("concat", "no operands");
  Tape<T>& t = parts.front().tape();
  const Shape& s0 = parts.front().shape();
  if (axis >= s0.size()) shape_fail("concat", "axis out of range for " + shape_str(s0));
  Shape out_shape = s0;
  out_shape[axis] = 0;
  std::vector<NodeId> ids;
  std::vector<std::size_t> extents;
  for (const Var<T>& p : parts) {
    if (&p.tape() != &t) shape_fail("concat", "operands live on different tapes");
    const Shape& s = p.shape();
    bool ok = s.size() == s0.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == s0[i];
    if (!ok) {
      shape_fail("concat", "shape " + shape_str(s) + " incompatible with " +
                               shape_str(s0) + " along axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
    ids.push_back(p.id());
    extents.push_back(s[axis]);
  }
  const AxisView v = axis_view(out_shape, axis, "concat");
  Tensor<T> y(out_shape);
  std::size_t start = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const T* src = parts[p].value().data().data();
    const std::size_t block = extents[p] * v.inner;
    for (std::size_t o = 0; o < v.outer; ++o) {
      std::copy_n(src + o * block, block,
                  y.data().data() + (o * v.extent + start) * v.inner);
    }
    start += extents[p];
  }
  return t.record(
      "concat", std::move(y), ids,
      [ids, extents, v](Tape<T>& tp, const Tensor<T>& g) {
        std::size_t begin = 0;
        for (std::size_t p = 0; p < ids.size(); ++p) {
          const std::size_t block = extents[p] * v.inner;
          if (tp.requires_grad(ids[p])) {
            Tensor<T> gp(tp.value(ids[p]).shape());
            for (std::size_t o = 0; o < v.outer; ++o) {
              std::copy_n(g.data().data() + (o * v.extent + begin) * v.inner, block,
                          gp.data().data() + o * block);
            }
            tp.accumulate(ids[p], gp);
          }
          begin += extents[p];
        }
      });
}

template <typename T>
Var<T> slice(const Var<T>& a, std::size_t axis, std::size_t begin,
             std::size_t end) {
  const AxisView v = axis_view(a.shape(), axis, "slice");
  if (begin >= end || end > v.extent) {
    shape_fail("slice", "range [" + std::to_string(begin) + ", " +
                            std::to_string(end) + ") invalid for axis " +
                            std::to_string(axis) + " of " + shape_str(a.shape()));
  }
  Shape out_shape = a.shape();
  out_shape[axis] = end - begin;
  const std::size_t len = end - begin;
  Tensor<T> y(out_shape);
  const T* src = a.value().data().data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    std::copy_n(src + (o * v.extent + begin) * v.inner, len * v.inner,
                y.data().data() + o * len * v.inner);
  }
  const NodeId ia = a.id();
  const Shape in_shape = a.shape();
  return a.tape().record(
      "slice", std::move(y), {ia},
      [ia, in_shape, v, begin, len](Tape<T>& tp, const Tensor<T>& g) {
        Tensor<T> ga(in_shape);
        for (std::size_t o = 0; o < v.outer; ++o) {
          std::copy_n(g.data().data() + o * len * v.inner, len * v.inner,
                      ga.data().data() + (o * v.extent + begin) * v.inner);
        }
        tp.accumulate(ia, ga);
      });
}

namespace {
template <typename T>
Tensor<T> flip_tensor(const Tensor<T>& x, const AxisView& v) {
  Tensor<T> y(x.shape());
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t k = 0; k < v.extent; ++k) {
      std::copy_n(x.data().data() + (o * v.extent + k) * v.inner, v.inner,
                  y.data().data() + (o * v.extent + (v.extent - 1 - k)) * v.inner);
    }
  return y;
}
}  // namespace

template <typename T>
Var<T> flip(const Var<T>& a, std::size_t axis) {
  const AxisView v = axis_view(a.shape(), axis, "flip");
  const NodeId ia = a.id();
  return a.tape().record("flip", flip_tensor(a.value(), v), {ia},
                         [ia, v](Tape<T>& tp, const Tensor<T>& g) {
                           tp.accumulate(ia, flip_tensor(g, v));
                         });
}

template <typename T>
Var<T> diag(const Var<T>& a) {
  require_rank(a, 2, "diag");
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  const std::size_t n = std::min(r, c);
  Tensor<T> y(Shape{n});
  for (std::size_t i = 0; i < n; ++i) y[i] = a.value()[i * c + i];
  const NodeId ia = a.id();
  return a.tape().record("diag", std::move(y), {ia},
                         [ia, r, c, n](Tape<T>& tp, const Tensor<T>& g) {
                           Tensor<T> ga(Shape{r, c});
                           for (std::size_t i = 0; i < n; ++i) ga[i * c + i] = g[i];
                           tp.accumulate(ia, ga);
                         });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  T s{0};
  for (T x : a.value().data()) s += x;
  const NodeId ia = a.id();
  const Shape in_shape = a.shape();
  return a.tape().record("sum", Tensor<T>::scalar(s), {ia},
                         [ia, in_shape](Tape<T>& tp, const Tensor<T>& g) {
                           tp.accumulate(ia, Tensor<T>(in_shape, g[0]));
                         });
}

namespace {
template <typename T>
Var<T> reduce_sum_axis(const Var<T>& a, std::size_t axis, T factor,
                       const char* name) {
  const AxisView v = axis_view(a.shape(), axis, name);
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor<T> y(out_shape);
  const T* src = a.value().data().data();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t k = 0; k < v.extent; ++k)
      for (std::size_t i = 0; i < v.inner; ++i)
        y[o * v.inner + i] += src[(o * v.extent + k) * v.inner + i];
  if (factor != T{1}) {
    for (T& x : y.data()) x *= factor;
  }
  const NodeId ia = a.id();
  const Shape in_shape = a.shape();
  return a.tape().record(
      name, std::move(y), {ia},
      [ia, in_shape, v, factor](Tape<T>& tp, const Tensor<T>& g) {
        Tensor<T> ga(in_shape);
        for (std::size_t o = 0; o < v.outer; ++o)
          for (std::size_t k = 0; k < v.extent; ++k)
            for (std::size_t i = 0; i < v.inner; ++i)
              ga[(o * v.extent + k) * v.inner + i] = g[o * v.inner + i] * factor;
        tp.accumulate(ia, ga);
      });
}
}  // namespace

template <typename T>
Var<T> sum(const Var<T>& a, std::size_t axis) {
  return reduce_sum_axis(a, axis, T{1}, "sum_axis");
}

template <typename T>
Var<T> mean(const Var<T>& a, std::size_t axis) {
  const AxisView v = axis_view(a.shape(), axis, "mean_axis");
  return reduce_sum_axis(a, axis, T{1} / static_cast<T>(v.extent), "mean_axis");
}

template <typename T>
Var<T> max(const Var<T>& a, std::size_t axis) {
  const AxisView v = axis_view(a.shape(), axis, "max_axis");
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor<T> y(out_shape);
  std::vector<std::size_t> arg(y.size());
  const T* src = a.value().data().data();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t i = 0; i < v.inner; ++i) {
      std::size_t best = o * v.extent * v.inner + i;
      for (std::size_t k = 1; k < v.extent; ++k) {
        const std::size_t idx = (o * v.extent + k) * v.inner + i;
        if (src[idx] > src[best]) best = idx;
      }
      y[o * v.inner + i] = src[best];
      arg[o * v.inner + i] = best;
    }
  const NodeId ia = a.id();
  const Shape in_shape = a.shape();
  return a.tape().record("max_axis", std::move(y), {ia},
                         [ia, in_shape, arg](Tape<T>& tp, const Tensor<T>& g) {
                           Tensor<T> ga(in_shape);
                           for (std::size_t j = 0; j < arg.size(); ++j) ga[arg[j]] += g[j];
                           tp.accumulate(ia, ga);
                         });
}

// ---------------------------------------------------------------------------
// Convolutions

namespace {

struct ConvGeom {
  std::size_t n, ci, h, w;   // input
  std::size_t co, kh, kw;    // kernel
  std::size_t ho, wo;        // output
  std::size_t sh, sw, ph, pw;
};

// y[n,co,oh,ow] += sum x[n,ci,oh*sh+kh-ph, ow*sw+kw-pw] * w[co,ci,kh,kw]
template <typename T>
void conv_forward(const ConvGeom& g, const T* x, const T* w, T* y) {
  for (std::size_t n = 0; n < g.n; ++n)
    for (std::size_t co = 0; co < g.co; ++co) {
      T* yp = y + (n * g.co + co) * g.ho * g.wo;
      for (std::size_t ci = 0; ci < g.ci; ++ci) {
        const T* xp = x + (n * g.ci + ci) * g.h * g.w;
        const T* wp = w + (co * g.ci + ci) * g.kh * g.kw;
        for (std::size_t kh = 0; kh < g.kh; ++kh)
          for (std::size_t oh = 0; oh < g.ho; ++oh) {
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.sh + kh) -
                                      static_cast<std::ptrdiff_t>(g.ph);
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) continue;
            const T* xrow = xp + static_cast<std::size_t>(ih) * g.w;
            T* yrow = yp + oh * g.wo;
            for (std::size_t kw = 0; kw < g.kw; ++kw) {
              const T wv = wp[kh * g.kw + kw];
              for (std::size_t ow = 0; ow < g.wo; ++ow) {
                const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.sw + kw) -
                                          static_cast<std::ptrdiff_t>(g.pw);
                if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.w)) continue;
                yrow[ow] += wv * xrow[iw];
              }
            }
          }
      }
    }
}

// gx += adjoint of conv_forward applied to gy
template <typename T>
void conv_backward_data(const ConvGeom& g, const T* gy, const T* w, T* gx) {
  for (std::size_t n = 0; n < g.n; ++n)
    for (std::size_t co = 0; co < g.co; ++co) {
      const T* gyp = gy + (n * g.co + co) * g.ho * g.wo;
      for (std::size_t ci = 0; ci < g.ci; ++ci) {
        T* gxp = gx + (n * g.ci + ci) * g.h * g.w;
        const T* wp = w + (co * g.ci + ci) * g.kh * g.kw;
        for (std::size_t kh = 0; kh < g.kh; ++kh)
          for (std::size_t oh = 0; oh < g.ho; ++oh) {
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.sh + kh) -
                                      static_cast<std::ptrdiff_t>(g.ph);
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) continue;
            T* xrow = gxp + static_cast<std::size_t>(ih) * g.w;
            const T* yrow = gyp + oh * g.wo;
            for (std::size_t kw = 0; kw < g.kw; ++kw) {
              const T wv = wp[kh * g.kw + kw];
              for (std::size_t ow = 0; ow < g.wo; ++ow) {
                const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.sw + kw) -
                                          static_cast<std::ptrdiff_t>(g.pw);
                if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.w)) continue;
                xrow[iw] += wv * yrow[ow];
              }
            }
          }
      }
    }
}

template <typename T>
void conv_backward_weight(const ConvGeom& g, const T* x, const T* gy, T* gw) {
  for (std::size_t n = 0; n < g.n; ++n)
    for (std::size_t co = 0; co < g.co; ++co) {
      const T* gyp = gy + (n * g.co + co) * g.ho * g.wo;
      for (std::size_t ci = 0; ci < g.ci; ++ci) {
        const T* xp = x + (n * g.ci + ci) * g.h * g.w;
        T* wp = gw + (co * g.ci + ci) * g.kh * g.kw;
        for (std::size_t kh = 0; kh < g.kh; ++kh)
          for (std::size_t oh = 0; oh < g.ho; ++oh) {
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.sh + kh) -
                                      static_cast<std::ptrdiff_t>(g.ph);
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) continue;
            const T* xrow = xp + static_cast<std::size_t>(ih) * g.w;
            const T* yrow = gyp + oh * g.wo;
            for (std::size_t kw = 0; kw < g.kw; ++kw) {
              T acc{0};
              for (std::size_t ow = 0; ow < g.wo; ++ow) {
                const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.sw + kw) -
                                          static_cast<std::ptrdiff_t>(g.pw);
                if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.w)) continue;
                acc += xrow[iw] * yrow[ow];
              }
              wp[kh * g.kw + kw] += acc;
            }
          }
      }
    }
}

template <typename T>
void require_conv_input(const Var<T>& x, const char* op) {
  if (x.value().rank() != 4) {
    shape_fail(op, "expected N x C x H x W input, got " + shape_str(x.shape()));
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Conv2dOptions& opt) {
  Tape<T>& t = tape_of(x, weight, "conv2d");
  require_conv_input(x, "conv2d");
  require_rank(weight, 4, "conv2d");
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws[1] != xs[1]) {
    shape_fail("conv2d", "weight " + shape_str(ws) + " expects " +
                             std::to_string(ws[1]) + " input channels, input is " +
                             shape_str(xs));
  }
  if (opt.stride_h == 0 || opt.stride_w == 0) shape_fail("conv2d", "zero stride");
  if (ws[2] > xs[2] + 2 * opt.pad_h || ws[3] > xs[3] + 2 * opt.pad_w) {
    shape_fail("conv2d", "kernel " + shape_str(ws) + " larger than padded input " +
                             shape_str(xs));
  }
  ConvGeom g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3],
             (xs[2] + 2 * opt.pad_h - ws[2]) / opt.stride_h + 1,
             (xs[3] + 2 * opt.pad_w - ws[3]) / opt.stride_w + 1,
             opt.stride_h, opt.stride_w, opt.pad_h, opt.pad_w};
  Tensor<T> y(Shape{g.n, g.co, g.ho, g.wo});
  conv_forward(g, x.value().data().data(), weight.value().data().data(),
               y.data().data());
  const NodeId ix = x.id(), iw = weight.id();
  return t.record("conv2d", std::move(y), {ix, iw},
                  [ix, iw, g](Tape<T>& tp, const Tensor<T>& gy) {
                    if (tp.requires_grad(ix)) {
                      Tensor<T> gx(tp.value(ix).shape());
                      conv_backward_data(g, gy.data().data(),
                                         tp.value(iw).data().data(), gx.data().data());
                      tp.accumulate(ix, gx);
                    }
                    if (tp.requires_grad(iw)) {
                      Tensor<T> gw(tp.value(iw).shape());
                      conv_backward_weight(g, tp.value(ix).data().data(),
                                           gy.data().data(), gw.data().data());
                      tp.accumulate(iw, gw);
                    }
                  });
}

template <typename T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& weight,
                        const Conv2dOptions& opt) {
  Tape<T>& t = tape_of(x, weight, "conv_transpose2d");
  require_conv_input(x, "conv_transpose2d");
  require_rank(weight, 4, "conv_transpose2d");
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws[0] != xs[1]) {
    shape_fail("conv_transpose2d", "weight " + shape_str(ws) + " expects " +
                                       std::to_string(ws[0]) +
                                       " input channels, input is " + shape_str(xs));
  }
  if (opt.stride_h == 0 || opt.stride_w == 0) {
    shape_fail("conv_transpose2d", "zero stride");
  }
  if (opt.output_pad_h >= opt.stride_h || opt.output_pad_w >= opt.stride_w) {
    shape_fail("conv_transpose2d", "output padding must be smaller than stride");
  }
  const std::ptrdiff_t ho = static_cast<std::ptrdiff_t>((xs[2] - 1) * opt.stride_h +
                                                        ws[2] + opt.output_pad_h) -
                            static_cast<std::ptrdiff_t>(2 * opt.pad_h);
  const std::ptrdiff_t wo = static_cast<std::ptrdiff_t>((xs[3] - 1) * opt.stride_w +
                                                        ws[3] + opt.output_pad_w) -
                            static_cast<std::ptrdiff_t>(2 * opt.pad_w);
  if (ho <= 0 || wo <= 0) {
    shape_fail("conv_transpose2d", "padding leaves an empty output for input " +
                                       shape_str(xs));
  }
  // The transposed convolution is the data-adjoint of a convolution whose
  // input is our output and whose output is our input.
  ConvGeom g{xs[0], ws[1], static_cast<std::size_t>(ho), static_cast<std::size_t>(wo),
             ws[0], ws[2], ws[3], xs[2], xs[3],
             opt.stride_h, opt.stride_w, opt.pad_h, opt.pad_w};
  Tensor<T> y(Shape{g.n, g.ci, g.h, g.w});
  conv_backward_data(g, x.value().data().data(), weight.value().data().data(),
                     y.data().data());
  const NodeId ix = x.id(), iw = weight.id();
  return t.record("conv_transpose2d", std::move(y), {ix, iw},
                  [ix, iw, g](Tape<T>& tp, const Tensor<T>& gy) {
                    if (tp.requires_grad(ix)) {
                      Tensor<T> gx(tp.value(ix).shape());
                      conv_forward(g, gy.data().data(), tp.value(iw).data().data(),
                                   gx.data().data());
                      tp.accumulate(ix, gx);
                    }
                    if (tp.requires_grad(iw)) {
                      Tensor<T> gw(tp.value(iw).shape());
                      conv_backward_weight(g, gy.data().data(),
                                           tp.value(ix).data().data(), gw.data().data());
                      tp.accumulate(iw, gw);
                    }
                  });
}

template <typename T>
Var<T> depthwise_conv2d(const Var<T>& x, const Var<T>& weight, std::size_t pad_h,
                        std::size_t pad_w) {
  Tape<T>& t = tape_of(x, weight, "depthwise_conv2d");
  require_conv_input(x, "depthwise_conv2d");
  require_rank(weight, 3, "depthwise_conv2d");
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws[0] != xs[1]) {
    shape_fail("depthwise_conv2d", "weight " + shape_str(ws) + " has " +
                                       std::to_string(ws[0]) + " filters for " +
                                       std::to_string(xs[1]) + " channels");
  }
  if (ws[1] > xs[2] + 2 * pad_h || ws[2] > xs[3] + 2 * pad_w) {
    shape_fail("depthwise_conv2d", "kernel " + shape_str(ws) +
                                       " larger than padded input " + shape_str(xs));
  }
  // A depthwise convolution is a dense convolution per channel with one
  // input and one output channel; reuse the dense kernels slice by slice.
  ConvGeom g{1, 1, xs[2], xs[3], 1, ws[1], ws[2],
             xs[2] + 2 * pad_h - ws[1] + 1, xs[3] + 2 * pad_w - ws[2] + 1,
             1, 1, pad_h, pad_w};
  const std::size_t n = xs[0], c = xs[1];
  const std::size_t in_plane = g.h * g.w, out_plane = g.ho * g.wo, k = g.kh * g.kw;
  Tensor<T> y(Shape{n, c, g.ho, g.wo});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      conv_forward(g, x.value().data().data() + (b * c + ch) * in_plane,
                   weight.value().data().data() + ch * k,
                   y.data().data() + (b * c + ch) * out_plane);
    }
  const NodeId ix = x.id(), iw = weight.id();
  return t.record(
      "depthwise_conv2d", std::move(y), {ix, iw},
      [ix, iw, g, n, c, in_plane, out_plane, k](Tape<T>& tp, const Tensor<T>& gy) {
        const T* xv = tp.value(ix).data().data();
        const T* wv = tp.value(iw).data().data();
        Tensor<T> gx(tp.value(ix).shape());
        Tensor<T> gw(tp.value(iw).shape());
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t ch = 0; ch < c; ++ch) {
            const T* gyp = gy.data().data() + (b * c + ch) * out_plane;
            if (tp.requires_grad(ix)) {
              conv_backward_data(g, gyp, wv + ch * k,
                                 gx.data().data() + (b * c + ch) * in_plane);
            }
            if (tp.requires_grad(iw)) {
              conv_backward_weight(g, xv + (b * c + ch) * in_plane, gyp,
                                   gw.data().data() + ch * k);
            }
          }
        tp.accumulate(ix, gx);
        tp.accumulate(iw, gw);
      });
}

template <typename T>
Var<T> pointwise_conv2d(const Var<T>& x, const Var<T>& weight) {
  Tape<T>& t = tape_of(x, weight, "pointwise_conv2d");
  require_conv_input(x, "pointwise_conv2d");
  require_rank(weight, 2, "pointwise_conv2d");
  const Shape& xs = x.shape();
  const std::size_t n = xs[0], ci = xs[1], hw = xs[2] * xs[3];
  const std::size_t co = weight.shape()[0];
  if (weight.shape()[1] != ci) {
    shape_fail("pointwise_conv2d", "weight " + shape_str(weight.shape()) +
                                       " does not match input " + shape_str(xs));
  }
  Tensor<T> y(Shape{n, co, xs[2], xs[3]});
  MapC<T> W(weight.value().data().data(), co, ci);
  for (std::size_t b = 0; b < n; ++b) {
    Map<T>(y.data().data() + b * co * hw, co, hw).noalias() =
        W * MapC<T>(x.value().data().data() + b * ci * hw, ci, hw);
  }
  const NodeId ix = x.id(), iw = weight.id();
  return t.record(
      "pointwise_conv2d", std::move(y), {ix, iw},
      [ix, iw, n, ci, co, hw](Tape<T>& tp, const Tensor<T>& gy) {
        MapC<T> Wm(tp.value(iw).data().data(), co, ci);
        Tensor<T> gx(tp.value(ix).shape());
        Tensor<T> gw(tp.value(iw).shape());
        Map<T> GW(gw.data().data(), co, ci);
        for (std::size_t b = 0; b < n; ++b) {
          MapC<T> G(gy.data().data() + b * co * hw, co, hw);
          if (tp.requires_grad(ix)) {
            Map<T>(gx.data().data() + b * ci * hw, ci, hw).noalias() =
                Wm.transpose() * G;
          }
          if (tp.requires_grad(iw)) {
            GW.noalias() +=
                G * MapC<T>(tp.value(ix).data().data() + b * ci * hw, ci, hw).transpose();
          }
        }
        tp.accumulate(ix, gx);
        tp.accumulate(iw, gw);
      });
}

template <typename T>
Var<T> max_pool2d(const Var<T>& x, std::size_t pool_h, std::size_t pool_w) {
  require_conv_input(x, "max_pool2d");
  const Shape& xs = x.shape();
  if (pool_h == 0 || pool_w == 0 || xs[2] % pool_h != 0 || xs[3] % pool_w != 0) {
    shape_fail("max_pool2d", "input " + shape_str(xs) + " not divisible by pool " +
                                 std::to_string(pool_h) + "x" + std::to_string(pool_w));
  }
  const std::size_t planes = xs[0] * xs[1], h = xs[2], w = xs[3];
  const std::size_t ho = h / pool_h, wo = w / pool_w;
  Tensor<T> y(Shape{xs[0], xs[1], ho, wo});
  std::vector<std::size_t> arg(y.size());
  const T* src = x.value().data().data();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t oh = 0; oh < ho; ++oh)
      for (std::size_t ow = 0; ow < wo; ++ow) {
        std::size_t best = p * h * w + (oh * pool_h) * w + ow * pool_w;
        for (std::size_t a = 0; a < pool_h; ++a)
          for (std::size_t b = 0; b < pool_w; ++b) {
            const std::size_t idx = p * h * w + (oh * pool_h + a) * w + ow * pool_w + b;
            if (src[idx] > src[best]) best = idx;
          }
        const std::size_t o = (p * ho + oh) * wo + ow;
        y[o] = src[best];
        arg[o] = best;
      }
  const NodeId ix = x.id();
  const Shape in_shape = xs;
  return x.tape().record("max_pool2d", std::move(y), {ix},
                         [ix, in_shape, arg](Tape<T>& tp, const Tensor<T>& g) {
                           Tensor<T> gx(in_shape);
                           for (std::size_t j = 0; j < arg.size(); ++j) gx[arg[j]] += g[j];
                           tp.accumulate(ix, gx);
                         });
}

// ---------------------------------------------------------------------------
// Batch normalisation

namespace {
template <typename T>
AxisView channel_view(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                      const char* op) {
  if (x.value().rank() < 2) shape_fail(op, "input needs a channel axis");
  const AxisView v = axis_view(x.shape(), 1, op);
  if (gamma.value().rank() != 1 || gamma.value().size() != v.extent ||
      beta.shape() != gamma.shape()) {
    shape_fail(op, "scale/shift " + shape_str(gamma.shape()) + "/" +
                       shape_str(beta.shape()) + " do not match " +
                       std::to_string(v.extent) + " channels");
  }
  return v;
}
}  // namespace

template <typename T>
Var<T> batch_norm_train(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                        T eps, BatchStats<T>* stats) {
  Tape<T>& t = tape_of(x, gamma, "batch_norm");
  const AxisView v = channel_view(x, gamma, beta, "batch_norm");
  const std::size_t m = v.outer * v.inner;
  if (m < 2) {
    shape_fail("batch_norm", "train mode needs at least 2 elements per channel, got " +
                                 std::to_string(m));
  }
  const T* src = x.value().data().data();
  std::vector<T> mean(v.extent, T{0}), var(v.extent, T{0}), inv_std(v.extent);
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t c = 0; c < v.extent; ++c) {
      const T* row = src + (o * v.extent + c) * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) mean[c] += row[i];
    }
  for (T& mu : mean) mu /= static_cast<T>(m);
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t c = 0; c < v.extent; ++c) {
      const T* row = src + (o * v.extent + c) * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) {
        const T d = row[i] - mean[c];
        var[c] += d * d;
      }
    }
  for (std::size_t c = 0; c < v.extent; ++c) {
    var[c] /= static_cast<T>(m);
    inv_std[c] = T{1} / std::sqrt(var[c] + eps);
  }
  Tensor<T> xhat(x.shape());
  Tensor<T> y(x.shape());
  const T* gm = gamma.value().data().data();
  const T* bt = beta.value().data().data();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t c = 0; c < v.extent; ++c)
      for (std::size_t i = 0; i < v.inner; ++i) {
        const std::size_t idx = (o * v.extent + c) * v.inner + i;
        xhat[idx] = (src[idx] - mean[c]) * inv_std[c];
        y[idx] = gm[c] * xhat[idx] + bt[c];
      }
  if (stats) *stats = BatchStats<T>{mean, var};
  const NodeId ix = x.id(), ig = gamma.id(), ib = beta.id();
  return t.record(
      "batch_norm", std::move(y), {ix, ig, ib},
      [ix, ig, ib, v, m, xhat = std::move(xhat), inv_std](Tape<T>& tp,
                                                          const Tensor<T>& g) {
        std::vector<T> sum_g(v.extent, T{0}), sum_gx(v.extent, T{0});
        for (std::size_t o = 0; o < v.outer; ++o)
          for (std::size_t c = 0; c < v.extent; ++c)
            for (std::size_t i = 0; i < v.inner; ++i) {
              const std::size_t idx = (o * v.extent + c) * v.inner + i;
              sum_g[c] += g[idx];
              sum_gx[c] += g[idx] * xhat[idx];
            }
        if (tp.requires_grad(ix)) {
          const T* gm = tp.value(ig).data().data();
          Tensor<T> gx(xhat.shape());
          const T mm = static_cast<T>(m);
          for (std::size_t o = 0; o < v.outer; ++o)
            for (std::size_t c = 0; c < v.extent; ++c) {
              const T k = gm[c] * inv_std[c] / mm;
              for (std::size_t i = 0; i < v.inner; ++i) {
                const std::size_t idx = (o * v.extent + c) * v.inner + i;
                gx[idx] = k * (mm * g[idx] - sum_g[c] - xhat[idx] * sum_gx[c]);
              }
            }
          tp.accumulate(ix, gx);
        }
        tp.accumulate(ig, Tensor<T>(Shape{v.extent}, sum_gx));
        tp.accumulate(ib, Tensor<T>(Shape{v.extent}, sum_g));
      });
}

template <typename T>
Var<T> batch_norm_eval(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                       const std::vector<T>& mean, const std::vector<T>& var,
                       T eps) {
  Tape<T>& t = tape_of(x, gamma, "batch_norm_eval");
  const AxisView v = channel_view(x, gamma, beta, "batch_norm_eval");
  if (mean.size() != v.extent || var.size() != v.extent) {
    shape_fail("batch_norm_eval", "running statistics do not match channel count");
  }
  std::vector<T> inv_std(v.extent);
  for (std::size_t c = 0; c < v.extent; ++c) {
    if (var[c] + eps <= T{0}) throw NumericError("batch_norm_eval: non-positive variance");
    inv_std[c] = T{1} / std::sqrt(var[c] + eps);
  }
  const T* src = x.value().data().data();
  const T* gm = gamma.value().data().data();
  const T* bt = beta.value().data().data();
  Tensor<T> y(x.shape());
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t c = 0; c < v.extent; ++c)
      for (std::size_t i = 0; i < v.inner; ++i) {
        const std::size_t idx = (o * v.extent + c) * v.inner + i;
        y[idx] = gm[c] * (src[idx] - mean[c]) * inv_std[c] + bt[c];
      }
  const NodeId ix = x.id(), ig = gamma.id(), ib = beta.id();
  return t.record(
      "batch_norm_eval", std::move(y), {ix, ig, ib},
      [ix, ig, ib, v, mean, inv_std](Tape<T>& tp, const Tensor<T>& g) {
        const T* xs = tp.value(ix).data().data();
        const T* gmv = tp.value(ig).data().data();
        Tensor<T> gx(tp.value(ix).shape());
        std::vector<T> sum_g(v.extent, T{0}), sum_gx(v.extent, T{0});
        for (std::size_t o = 0; o < v.outer; ++o)
          for (std::size_t c = 0; c < v.extent; ++c)
            for (std::size_t i = 0; i < v.inner; ++i) {
              const std::size_t idx = (o * v.extent + c) * v.inner + i;
              const T xh = (xs[idx] - mean[c]) * inv_std[c];
              gx[idx] = g[idx] * gmv[c] * inv_std[c];
              sum_g[c] += g[idx];
              sum_gx[c] += g[idx] * xh;
            }
        tp.accumulate(ix, gx);
        tp.accumulate(ig, Tensor<T>(Shape{v.extent}, sum_gx));
        tp.accumulate(ib, Tensor<T>(Shape{v.extent}, sum_g));
      });
}

#define MADSEP_INSTANTIATE_OPS(T)                                                   \
  template Var<T> add(const Var<T>&, const Var<T>&);                               \
  template Var<T> sub(const Var<T>&, const Var<T>&);                               \
  template Var<T> mul(const Var<T>&, const Var<T>&);                               \
  template Var<T> scale(const Var<T>&, T);                                         \
  template Var<T> add_scalar(const Var<T>&, T);                                    \
  template Var<T> add_bias(const Var<T>&, const Var<T>&, std::size_t);             \
  template Var<T> exp(const Var<T>&);                                              \
  template Var<T> log(const Var<T>&);                                              \
  template Var<T> sqrt(const Var<T>&);                                             \
  template Var<T> abs(const Var<T>&);                                              \
  template Var<T> square(const Var<T>&);                                           \
  template Var<T> sigmoid(const Var<T>&);                                          \
  template Var<T> tanh(const Var<T>&);                                             \
  template Var<T> relu(const Var<T>&);                                             \
  template Var<T> lrelu(const Var<T>&, T);                                         \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                            \
  template Var<T> transpose(const Var<T>&);                                        \
  template Var<T> reshape(const Var<T>&, Shape);                                   \
  template Var<T> concat(const std::vector<Var<T>>&, std::size_t);                 \
  template Var<T> slice(const Var<T>&, std::size_t, std::size_t, std::size_t);     \
  template Var<T> flip(const Var<T>&, std::size_t);                                \
  template Var<T> diag(const Var<T>&);                                             \
  template Var<T> sum(const Var<T>&);                                              \
  template Var<T> sum(const Var<T>&, std::size_t);                                 \
  template Var<T> mean(const Var<T>&, std::size_t);                                \
  template Var<T> max(const Var<T>&, std::size_t);                                 \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Conv2dOptions&);      \
  template Var<T> depthwise_conv2d(const Var<T>&, const Var<T>&, std::size_t,      \
                                   std::size_t);                                   \
  template Var<T> pointwise_conv2d(const Var<T>&, const Var<T>&);                  \
  template Var<T> conv_transpose2d(const Var<T>&, const Var<T>&,                   \
                                   const Conv2dOptions&);                          \
  template Var<T> max_pool2d(const Var<T>&, std::size_t, std::size_t);             \
  template Var<T> batch_norm_train(const Var<T>&, const Var<T>&, const Var<T>&, T, \
                                   BatchStats<T>*);                                \
  template Var<T> batch_norm_eval(const Var<T>&, const Var<T>&, const Var<T>&,     \
                                  const std::vector<T>&, const std::vector<T>&, T);

MADSEP_INSTANTIATE_OPS(float)
MADSEP_INSTANTIATE_OPS(double)

#undef MADSEP_INSTANTIATE_OPS

}  // namespace madsep::ops
