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
#include <vector>

#include "madsep/grad_check.hpp"
#include "madsep/ops.hpp"
#include "madsep/rng.hpp"

namespace madsep {
namespace {

using TensorD = Tensor<double>;

TensorD random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0,
                      double hi = 1.0) {
  Rng rng(seed);
  TensorD t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Random values bounded away from zero so kinked functions stay smooth
// within the finite-difference stencil.
TensorD away_from_zero(Shape shape, std::uint64_t seed) {
  TensorD t = random_tensor(std::move(shape), seed, 0.1, 1.0);
  Rng rng(seed + 1000);
  for (double& v : t.data()) {
    if (rng.bernoulli(0.5)) v = -v;
  }
  return t;
}

TEST(Tensor, RejectsMismatchedData) {
  EXPECT_THROW(TensorD(Shape{2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  EXPECT_THROW(TensorD(Shape{2, 0}), ShapeError);
}

TEST(Tensor, ScalarHasOneElement) {
  const TensorD s = TensorD::scalar(3.5);
  EXPECT_EQ(s.rank(), 0u);
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(s.item(), 3.5);
}

TEST(Ops, HadamardProduct) {
  Tape<double> t;
  auto a = t.constant(TensorD::vector({1, 2}));
  auto b = t.constant(TensorD::vector({3, 4}));
  const auto y = a * b;
  EXPECT_EQ(y.value(), TensorD::vector({3, 8}));
}

TEST(Ops, FlipIsAnInvolution) {
  Tape<double> t;
  auto x = t.constant(random_tensor({3, 5, 4}, 1));
  for (std::size_t axis = 0; axis < 3; ++axis) {
    EXPECT_EQ(ops::flip(ops::flip(x, axis), axis).value(), x.value());
  }
}

TEST(Ops, TransposeAndReshapeAreBijections) {
  Tape<double> t;
  auto x = t.constant(random_tensor({3, 7}, 2));
  EXPECT_EQ(ops::transpose(ops::transpose(x)).value(), x.value());
  EXPECT_EQ(ops::reshape(ops::reshape(x, {7, 3}), {3, 7}).value(), x.value());
}

TEST(Ops, IdentityMatmul) {
  Tape<double> t;
  auto a = t.constant(random_tensor({3, 4}, 3));
  auto i3 = t.constant(TensorD::eye(3));
  EXPECT_EQ(ops::matmul(i3, a).value(), a.value());
}

TEST(Ops, ShapeMismatchNamesOpAndShapes) {
  Tape<double> t;
  auto a = t.constant(TensorD(Shape{2, 3}));
  auto b = t.constant(TensorD(Shape{2, 2}));
  try {
    ops::add(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("add"), std::string::npos);
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos);
    EXPECT_NE(msg.find("[2, 2]"), std::string::npos);
  }
  EXPECT_THROW(ops::matmul(a, a), ShapeError);
}

TEST(Ops, LogOfNonPositiveIsAnError) {
  Tape<double> t;
  auto x = t.constant(TensorD::vector({1.0, 0.0}));
  EXPECT_THROW(ops::log(x), NumericError);
}

TEST(Ops, NonFiniteResultIsAnError) {
  Tape<double> t;
  auto x = t.constant(TensorD::vector({1000.0}));
  EXPECT_THROW(ops::exp(x), NumericError);
}

TEST(Ops, InputsAreNotMutated) {
  Tape<double> t;
  const TensorD xv = random_tensor({4, 4}, 4);
  auto x = t.leaf(xv, true);
  auto y = ops::sum(ops::relu(ops::add_scalar(ops::mul(x, x), -0.3)));
  t.backward(y);
  EXPECT_EQ(x.value(), xv);
}

TEST(Backward, SquareSumGradient) {
  Tape<double> t;
  auto x = t.leaf(TensorD::vector({1, 2, 3}), true);
  t.backward(ops::sum(x * x));
  EXPECT_EQ(x.grad(), TensorD::vector({2, 4, 6}));
}

TEST(Backward, MatmulAdjoint) {
  Tape<double> t;
  const TensorD av = random_tensor({3, 4}, 5);
  const TensorD bv = random_tensor({4, 2}, 6);
  auto a = t.leaf(av, true);
  auto b = t.constant(bv);
  t.backward(ops::sum(ops::matmul(a, b)));
  // d/dA sum(AB) = ones(3x2) * B^T
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(a.grad().at({i, k}), bv.at({k, 0}) + bv.at({k, 1}), 1e-15);
    }
}

TEST(Backward, NonScalarLossIsAnError) {
  Tape<double> t;
  auto x = t.leaf(TensorD::vector({1, 2}), true);
  EXPECT_THROW(t.backward(x * x), ShapeError);
}

TEST(Backward, DisconnectedLeafGetsZeroGradient) {
  Tape<double> t;
  auto x = t.leaf(TensorD::vector({1, 2}), true);
  auto unused = t.leaf(TensorD::vector({5, 6, 7}), true);
  t.backward(ops::sum(x));
  EXPECT_EQ(unused.grad(), TensorD::zeros({3}));
}

TEST(Backward, FanOutAccumulates) {
  auto f = [](Tape<double>& t, const Var<double>& x) {
    (void)t;
    return ops::sum(ops::sigmoid(x) * x);
  };
  const TensorD xv = random_tensor({5}, 7);
  Tape<double> t1;
  auto x1 = t1.leaf(xv, true);
  t1.backward(f(t1, x1));
  Tape<double> t2;
  auto x2 = t2.leaf(xv, true);
  t2.backward(f(t2, x2) + f(t2, x2));
  for (std::size_t i = 0; i < xv.size(); ++i) {
    EXPECT_EQ(x2.grad()[i], 2.0 * x1.grad()[i]);
  }
}

TEST(Backward, TapeIsTopologicallyOrdered) {
  Tape<double> t;
  auto x = t.leaf(random_tensor({3}, 8), true);
  auto y = ops::sum(ops::tanh(x) * ops::exp(x));
  for (NodeId id = 0; id < t.size(); ++id) {
    for (NodeId in : t.inputs(id)) EXPECT_LT(in, id);
  }
  EXPECT_EQ(y.id(), t.size() - 1);
}

TEST(GradCheck, SigmoidSumPasses) {
  const auto report = grad_check(
      [](Tape<double>&, const Var<double>& x) { return ops::sum(ops::sigmoid(x)); },
      random_tensor({10, 10}, 9), {.step = 1e-5, .tolerance = 1e-6});
  EXPECT_TRUE(report.pass) << report.summary();
}

TEST(GradCheck, WrongBackwardRuleFails) {
  // d/dx x^2 deliberately reported as x instead of 2x.
  auto broken_square = [](Tape<double>& t, const Var<double>& x) {
    TensorD y = x.value();
    for (double& v : y.data()) v = v * v;
    const NodeId ix = x.id();
    auto out = t.record("broken_square", std::move(y), {ix},
                        [ix](Tape<double>& tp, const TensorD& g) {
                          TensorD gx(g.shape());
                          for (std::size_t i = 0; i < g.size(); ++i)
                            gx[i] = g[i] * tp.value(ix)[i];
                          tp.accumulate(ix, gx);
                        });
    return ops::sum(out);
  };
  const auto report = grad_check(broken_square, random_tensor({6}, 10, 0.5, 1.0));
  EXPECT_FALSE(report.pass);
}

TEST(GradCheck, NonScalarFunctionIsAnError) {
  EXPECT_THROW(grad_check([](Tape<double>&, const Var<double>& x) { return x; },
                          random_tensor({3}, 11)),
               ShapeError);
}

// Every primitive against central differences over 10 seeds.
class PrimitiveGradients : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(PrimitiveGradients, MatchFiniteDifferences) {
  const std::uint64_t seed = GetParam();
  const GradCheckOptions opt{.step = 1e-5, .tolerance = 1e-5, .seed = seed};
  struct Case {
    const char* name;
    std::vector<Shape> shapes;
    MultiScalarFn f;
    bool positive = false;
  };
  const Shape s{3, 4};
  const std::vector<Case> cases = {
      {"add", {s, s}, [](auto&, const auto& v) { return ops::sum(ops::square(v[0] + v[1])); }},
      {"sub", {s, s}, [](auto&, const auto& v) { return ops::sum(ops::square(v[0] - v[1])); }},
      {"mul", {s, s}, [](auto&, const auto& v) { return ops::sum(v[0] * v[1]); }},
      {"scale", {s}, [](auto&, const auto& v) { return ops::sum(ops::square(ops::scale(v[0], 2.5))); }},
      {"add_bias", {s, {4}}, [](auto&, const auto& v) { return ops::sum(ops::square(ops::add_bias(v[0], v[1], 1))); }},
      {"add_bias0", {s, {3}}, [](auto&, const auto& v) { return ops::sum(ops::square(ops::add_bias(v[0], v[1], 0))); }},
      {"exp", {s}, [](auto&, const auto& v) { return ops::sum(ops::exp(v[0])); }},
      {"log", {s}, [](auto&, const auto& v) { return ops::sum(ops::log(v[0])); }, true},
      {"sqrt", {s}, [](auto&, const auto& v) { return ops::sum(ops::sqrt(v[0])); }, true},
      {"abs", {s}, [](auto&, const auto& v) { return ops::sum(ops::square(ops::abs(v[0]))); }},
      {"sigmoid", {s}, [](auto&, const auto& v) { return ops::sum(ops::sigmoid(v[0])); }},
      {"tanh", {s}, [](auto&, const auto& v) { return ops::sum(ops::tanh(v[0])); }},
      {"relu", {s}, [](auto&, const auto& v) { return ops::sum(ops::square(ops::relu(v[0]))); }},
      {"lrelu", {s}, [](auto&, const auto& v) { return ops::sum(ops::square(ops::lrelu(v[0], 0.01))); }},
      {"matmul", {{3, 5}, {5, 2}}, [](auto&, const auto& v) { return ops::sum(ops::square(ops::matmul(v[0], v[1]))); }},
      {"transpose", {s, {4, 3}}, [](auto&, const auto& v) { return ops::sum(ops::transpose(v[0]) * v[1]); }},
      {"reshape", {s, {2, 6}}, [](auto&, const auto& v) { return ops::sum(ops::reshape(v[0], {2, 6}) * v[1]); }},
      {"concat", {s, {3, 2}}, [](auto&, const auto& v) { return ops::sum(ops::square(ops::concat<double>({v[0], v[1], v[0]}, 1))); }},
      {"slice", {{3, 4, 5}}, [](auto&, const auto& v) { return ops::sum(ops::square(ops::slice(v[0], 1, 1, 3))); }},
      {"flip", {s, s}, [](auto&, const auto& v) { return ops::sum(ops::flip(v[0], 0) * v[1]); }},
      {"diag", {{3, 5}}, [](auto&, const auto& v) { return ops::sum(ops::square(ops::diag(v[0]))); }},
      {"sum_axis", {{2, 3, 4}}, [](auto&, const auto& v) { return ops::sum(ops::square(ops::sum(v[0], 1))); }},
      {"mean_axis", {{2, 3, 4}}, [](auto&, const auto& v) { return ops::sum(ops::square(ops::mean(v[0], 2))); }},
      {"max_axis", {{2, 3, 4}}, [](auto&, const auto& v) { return ops::sum(ops::square(ops::max(v[0], 1))); }},
  };
  for (std::size_t c = 0; c < cases.size(); ++c) {
    std::vector<TensorD> inputs;
    for (std::size_t k = 0; k < cases[c].shapes.size(); ++k) {
      const std::uint64_t s2 = seed * 977 + c * 31 + k;
      inputs.push_back(cases[c].positive ? random_tensor(cases[c].shapes[k], s2, 0.5, 2.0)
                                         : away_from_zero(cases[c].shapes[k], s2));
    }
    const auto report = grad_check(cases[c].f, inputs, opt);
    EXPECT_TRUE(report.pass) << cases[c].name << ": " << report.summary();
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, PrimitiveGradients, ::testing::Range<std::uint64_t>(0, 10));

TEST(Ops, Float32Works) {
  Tape<float> t;
  auto x = t.leaf(Tensor<float>::vector({1.f, 2.f, 3.f}), true);
  t.backward(ops::sum(x * x));
  EXPECT_EQ(x.grad(), Tensor<float>::vector({2.f, 4.f, 6.f}));
}

}  // namespace
}  // namespace madsep
