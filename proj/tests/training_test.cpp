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

#include "madsep/training.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "madsep/grad_check.hpp"
#include "test_util.hpp"

namespace madsep::training {
namespace {

using madsep::testing::random_tensor;
using models::MaskerConfig;
using models::ModelParams;
using models::Variant;
using TensorD = Tensor<double>;

// Scalar-loop evaluation of the divergence, written out independently.
double gkl_oracle(const TensorD& x, const TensorD& y, double eps) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double a = x[i], b = y[i];
    const long double t = a == 0.0L ? 0.0L : a * std::log((a + eps) / (b + eps));
    s += t - a + b;
  }
  return static_cast<double>(s);
}

TEST(Gkl, HandValue) {
  const double exact = 2.0 * std::log(2.0) - 1.0;
  EXPECT_NEAR(gkl(TensorD::vector({2.0}), TensorD::vector({1.0}), 0.0), exact, 1e-15);
  // The default eps shifts the value by eps * (1 - x / y) = -1e-12.
  const double v = gkl(TensorD::vector({2.0}), TensorD::vector({1.0}));
  EXPECT_NEAR(v, exact - 1e-12, 1e-15);
  EXPECT_NEAR(v, 0.386294, 1e-6);
}

TEST(Gkl, IdentityAndZeroReference) {
  const TensorD x = random_tensor({3, 5}, 1, 0.0, 2.0);
  EXPECT_NEAR(gkl(x, x), 0.0, 1e-12);
  const TensorD y = random_tensor({3, 5}, 2, 0.0, 2.0);
  double sum_y = 0.0;
  for (double v : y.data()) sum_y += v;
  EXPECT_NEAR(gkl(TensorD::zeros({3, 5}), y), sum_y, 1e-12);
}

TEST(Gkl, RandomPairsNonnegativeAndSeparating) {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.next() % 12;
    TensorD x({n}), y({n});
    for (std::size_t i = 0; i < n; ++i) {
      // Include exact zeros now and then.
      x[i] = rng.uniform() < 0.1 ? 0.0 : rng.uniform(0.0, 3.0);
      y[i] = rng.uniform() < 0.1 ? 0.0 : rng.uniform(0.0, 3.0);
    }
    const double d = gkl(x, y);
    ASSERT_GE(d, 0.0) << "trial " << trial;
    if (x != y) ASSERT_GT(d, 0.0) << "distinct pair scored zero, trial " << trial;
    ASSERT_NEAR(d, gkl_oracle(x, y, 1e-12), 1e-9 * std::max(1.0, d));
    ASSERT_NEAR(gkl(x, x), 0.0, 1e-12);
    ASSERT_NEAR(gkl(y, y), 0.0, 1e-12);
  }
}

TEST(Gkl, RejectsNegativeEntriesAndMismatchedShapes) {
  EXPECT_THROW(gkl(TensorD::vector({-1.0}), TensorD::vector({1.0})), std::invalid_argument);
  EXPECT_THROW(gkl(TensorD::vector({1.0}), TensorD::vector({-0.5})), std::invalid_argument);
  EXPECT_THROW(gkl(TensorD::vector({1.0, 2.0}), TensorD::vector({1.0})), std::invalid_argument);
  Tape<double> tape;
  EXPECT_THROW(gkl(TensorD::vector({1.0}), tape.constant(TensorD::vector({-1.0}))),
               std::invalid_argument);
}

TEST(Gkl, TapeVersionMatchesPlainValue) {
  const TensorD x = random_tensor({4, 6}, 4, 0.0, 2.0);
  const TensorD y = random_tensor({4, 6}, 5, 0.1, 2.0);
  Tape<double> tape;
  EXPECT_NEAR(gkl(x, tape.constant(y)).value().item(), gkl(x, y), 1e-12);
}

TEST(Gkl, GradCheckOfMaskedEstimate) {
  // f(m) = gkl(v || x * m) with x and m strictly positive.
  const TensorD v = random_tensor({3, 7}, 6, 0.0, 2.0);
  const TensorD x = random_tensor({3, 7}, 7, 0.5, 1.5);
  const TensorD m = random_tensor({3, 7}, 8, 0.2, 1.2);
  auto f = [&](Tape<double>& tape, const std::vector<Var<double>>& in) {
    return gkl(v, tape.constant(x) * in[0]);
  };
  const auto r = grad_check(f, std::vector<TensorD>{m}, {.tolerance = 1e-5});
  EXPECT_TRUE(r.pass) << r.summary();
}

// ---------------------------------------------------------------------------

struct LossInputs {
  TensorD target, masker, denoised, wm, wd;
};

Loss<double> loss_of(Tape<double>& tape, const LossInputs& in, const LossConfig& cfg = {}) {
  return mad_loss(in.target, tape.constant(in.masker), tape.constant(in.denoised),
                  tape.constant(in.wm), tape.constant(in.wd), cfg);
}

TEST(MadLoss, PerfectEstimatesAndZeroWeightsGiveZero) {
  const TensorD v = random_tensor({4, 16}, 9, 0.0, 1.0);
  Tape<double> tape;
  const auto l = loss_of(tape, {v, v, v, TensorD::zeros({16, 8}), TensorD::zeros({16, 8})});
  EXPECT_NEAR(l.value.value().item(), 0.0, 1e-12);
}

TEST(MadLoss, ZeroEstimatesMatchScalarLoop) {
  const std::size_t T = 4, F = 16;
  const TensorD ones = TensorD::ones({T, F});
  const TensorD zero = TensorD::zeros({T, F});
  Tape<double> tape;
  const auto l = loss_of(tape, {ones, zero, zero, TensorD::zeros({16, 8}), TensorD::zeros({16, 8})});
  const double oracle = 2.0 * gkl_oracle(ones, zero, 1e-12);
  EXPECT_NEAR(l.value.value().item(), oracle, 1e-9 * oracle);
  // Leading-order size: 2 T F (log(1/eps) - 1).
  EXPECT_NEAR(oracle, 2.0 * T * F * (std::log(1e12) - 1.0), 1e-6);
}

TEST(MadLoss, DiagonalPenaltyOfIdentitySlice) {
  TensorD wm = TensorD::zeros({2, 5});
  wm.at({0, 0}) = 1.0;
  wm.at({1, 1}) = -1.0;
  const TensorD v = TensorD::ones({1, 5});
  Tape<double> tape;
  const auto l = loss_of(tape, {v, v, v, wm, TensorD::zeros({5, 2})});
  EXPECT_NEAR(l.terms.diag_penalty, 0.02, 1e-15);
  EXPECT_NEAR(l.value.value().item(), 0.02, 1e-15);
}

TEST(MadLoss, DiagonalPenaltyIgnoresOffDiagonalEntries) {
  const TensorD v = random_tensor({2, 6}, 10, 0.1, 1.0);
  TensorD wm = random_tensor({4, 6}, 11);
  Tape<double> t1;
  const double before = loss_of(t1, {v, v, v, wm, TensorD::zeros({6, 3})}).terms.diag_penalty;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 6; ++c)
      if (r != c) wm.at({r, c}) += 10.0 * static_cast<double>(r + c);
  Tape<double> t2;
  EXPECT_EQ(loss_of(t2, {v, v, v, wm, TensorD::zeros({6, 3})}).terms.diag_penalty, before);
}

TEST(MadLoss, FrobeniusPenalty) {
  const TensorD v = TensorD::ones({1, 3});
  const TensorD wd = random_tensor({3, 2}, 12);
  double sq = 0.0;
  for (double w : wd.data()) sq += w * w;
  Tape<double> tape;
  const auto l = loss_of(tape, {v, v, v, TensorD::zeros({2, 3}), wd});
  EXPECT_NEAR(l.terms.weight_penalty, 1e-4 * sq, 1e-16);
}

TEST(MadLoss, ConfigValidation) {
  LossConfig c;
  c.lambda1 = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = LossConfig{};
  c.eps = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

class LossGrad : public ::testing::TestWithParam<Variant> {};

TEST_P(LossGrad, EveryModelParameterPassesGradCheck) {
  const MaskerConfig cfg = MaskerConfig::tiny(GetParam());
  Rng init(3);
  auto params = ModelParams<double>::create(cfg, init);
  for (auto* b : {&params.masker.param("fnn_m.bias"), &params.denoiser.param("fnn_d1.bias"),
                  &params.denoiser.param("fnn_d2.bias")}) {
    for (double& x : b->data()) x += 1.0;
  }
  const TensorD v = random_tensor({2, cfg.T + cfg.L, cfg.F}, 21, 0.1, 1.0);
  const TensorD target = random_tensor({2, cfg.T, cfg.F}, 22, 0.0, 1.0);
  std::vector<std::string> mn, dn;
  std::vector<TensorD> inputs;
  for (const auto& [n, t] : params.masker.params) {
    mn.push_back(n);
    inputs.push_back(t);
  }
  for (const auto& [n, t] : params.denoiser.params) {
    dn.push_back(n);
    inputs.push_back(t);
  }
  auto f = [&](Tape<double>& tape, const std::vector<Var<double>>& in) {
    nn::Binding<double> bm(tape, params.masker, false), bd(tape, params.denoiser, false);
    for (std::size_t i = 0; i < mn.size(); ++i) bm.set(mn[i], in[i]);
    for (std::size_t i = 0; i < dn.size(); ++i) bd.set(dn[i], in[mn.size() + i]);
    Rng rng(5);
    const auto out = models::mad_forward(tape.constant(v), cfg, bm, bd, nn::Mode::kTrain, rng);
    return mad_loss(target, out.masker.estimate, out.denoised, bm(models::kMaskerOutputWeight),
                    bd(models::kDenoiserOutputWeight))
        .value;
  };
  const auto r = grad_check(
      f, inputs, {.step = 1e-6, .tolerance = 1e-4, .coords_per_input = 16, .scale_floor = 1e-3});
  EXPECT_TRUE(r.pass) << r.summary();
}

INSTANTIATE_TEST_SUITE_P(Training, LossGrad, ::testing::Values(Variant::kRnn, Variant::kDwsCnn),
                         [](const auto& info) {
                           return std::string(info.param == Variant::kRnn ? "Rnn" : "DwsCnn");
                         });

// ---------------------------------------------------------------------------

TensorMap<double> grads_with_norm(double norm) {
  TensorMap<double> g{{"a", random_tensor({3, 4}, 30)}, {"b", random_tensor({5}, 31)}};
  const double n = global_norm(g);
  for (auto& [k, t] : g)
    for (double& x : t.data()) x *= norm / n;
  return g;
}

TEST(Clip, ScalesDownToMaxNorm) {
  auto g = grads_with_norm(1.0);
  const auto before = g;
  EXPECT_NEAR(clip_grad_norm(g, 0.5), 1.0, 1e-12);
  EXPECT_NEAR(global_norm(g), 0.5, 1e-12);
  for (const auto& [k, t] : g)
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(t[i], 0.5 * before.at(k)[i], 1e-15);
}

TEST(Clip, LeavesSmallAndZeroGradientsAlone) {
  auto g = grads_with_norm(0.3);
  const auto before = g;
  clip_grad_norm(g, 0.5);
  EXPECT_EQ(g, before);
  TensorMap<double> z{{"a", TensorD::zeros({4})}};
  EXPECT_EQ(clip_grad_norm(z, 0.5), 0.0);
  EXPECT_EQ(z.at("a"), TensorD::zeros({4}));
}

TEST(Clip, Idempotent) {
  for (double n : {0.1, 0.5, 2.0, 37.0}) {
    auto once = grads_with_norm(n);
    clip_grad_norm(once, 0.5);
    auto twice = once;
    clip_grad_norm(twice, 0.5);
    for (const auto& [k, t] : once)
      for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(twice.at(k)[i], t[i], 1e-16);
  }
}

// ---------------------------------------------------------------------------

TEST(AdamTest, TwoStepHandTrace) {
  // Recurrences written out per coordinate for g1 = (0.5, -2, 0) and
  // g2 = (1, 1, -3) starting from p0 = (1, 2, 3).
  const double lr = 1e-2, b1 = 0.9, b2 = 0.999, e = 1e-8;
  const double p0[3] = {1.0, 2.0, 3.0};
  const double g1[3] = {0.5, -2.0, 0.0};
  const double g2[3] = {1.0, 1.0, -3.0};
  double expect1[3], expect2[3];
  for (int i = 0; i < 3; ++i) {
    const double m1 = 0.1 * g1[i], v1 = 0.001 * g1[i] * g1[i];
    expect1[i] = p0[i] - lr * (m1 / 0.1) / (std::sqrt(v1 / 0.001) + e);
    const double m2 = 0.9 * m1 + 0.1 * g2[i], v2 = 0.999 * v1 + 0.001 * g2[i] * g2[i];
    const double c1 = 1.0 - 0.81, c2 = 1.0 - 0.999 * 0.999;
    expect2[i] = expect1[i] - lr * (m2 / c1) / (std::sqrt(v2 / c2) + e);
  }
  // First step moves every nonzero coordinate by lr against the gradient sign.
  EXPECT_NEAR(expect1[0], 1.0 - lr, 1e-9);
  EXPECT_NEAR(expect1[1], 2.0 + lr, 1e-9);

  Adam<double> adam({.lr = lr, .beta1 = b1, .beta2 = b2, .eps = e});
  TensorMap<double> p{{"w", TensorD::vector({1.0, 2.0, 3.0})}};
  adam.step(p, {{"w", TensorD::vector({0.5, -2.0, 0.0})}});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p.at("w")[i], expect1[i], 1e-15);
  adam.step(p, {{"w", TensorD::vector({1.0, 1.0, -3.0})}});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p.at("w")[i], expect2[i], 1e-15);
  EXPECT_EQ(adam.steps(), 2u);
}

TEST(AdamTest, ZeroGradientLeavesParametersAndDecaysMoments) {
  Adam<double> adam;
  TensorMap<double> p{{"w", TensorD::vector({1.0, -1.0})}};
  adam.step(p, {{"w", TensorD::vector({1.0, 1.0})}});
  const TensorD after_first = p.at("w");
  const double m_before = adam.first_moments().at("w")[0];
  adam.step(p, {{"w", TensorD::zeros({2})}});
  EXPECT_NEAR(adam.first_moments().at("w")[0], 0.9 * m_before, 1e-15);
  // The bias-corrected first moment is still nonzero, so a zero gradient
  // right after a nonzero one still moves p; from a fresh state it cannot.
  Adam<double> fresh;
  TensorMap<double> q{{"w", TensorD::vector({1.0, -1.0})}};
  for (int i = 0; i < 3; ++i) fresh.step(q, {{"w", TensorD::zeros({2})}});
  EXPECT_EQ(q.at("w"), TensorD::vector({1.0, -1.0}));
  (void)after_first;
}

TEST(AdamTest, ConstantGradientMovesMonotonically) {
  Adam<double> adam;
  TensorMap<double> p{{"w", TensorD::vector({0.0, 0.0})}};
  double prev0 = 0.0, prev1 = 0.0;
  for (int i = 0; i < 200; ++i) {
    adam.step(p, {{"w", TensorD::vector({0.7, -0.02})}});
    ASSERT_LT(p.at("w")[0], prev0);
    ASSERT_GT(p.at("w")[1], prev1);
    prev0 = p.at("w")[0];
    prev1 = p.at("w")[1];
  }
}

TEST(AdamTest, RejectsUnknownOrMisshapenGradients) {
  Adam<double> adam;
  TensorMap<double> p{{"w", TensorD::zeros({2})}};
  EXPECT_THROW(adam.step(p, {{"v", TensorD::zeros({2})}}), std::invalid_argument);
  EXPECT_THROW(adam.step(p, {{"w", TensorD::zeros({3})}}), std::invalid_argument);
}

// ---------------------------------------------------------------------------

signal::StftConfig tiny_stft() { return {.window_len = 30, .hop = 15, .fft_len = 30}; }

std::vector<signal::SegmentPair> tiny_segments(const MaskerConfig& cfg, std::uint64_t seed) {
  const auto tracks = make_synthetic_dataset(seed, 1, 2.0);
  const auto vm = signal::stft(tracks[0].mixture, tiny_stft()).magnitude_tensor();
  const auto vv = signal::stft(tracks[0].voice, tiny_stft()).magnitude_tensor();
  auto all = signal::segment(vm, vv, cfg.T, cfg.L);
  // Sixteen consecutive segments from the middle of the track.
  const auto mid = static_cast<std::ptrdiff_t>(all.size() / 2);
  return {all.begin() + mid, all.begin() + mid + 16};
}

MaskerConfig tiny_no_dropout(Variant v) {
  MaskerConfig c = MaskerConfig::tiny(v);
  c.p_enc = c.p_dec = 0.0;
  return c;
}

class TrainLoop : public ::testing::TestWithParam<Variant> {};

TEST_P(TrainLoop, OverfitsOneSegment) {
  const MaskerConfig cfg = MaskerConfig::tiny(GetParam());
  const auto segs = tiny_segments(cfg, 7);
  const std::vector<signal::SegmentPair> one{segs[segs.size() / 2]};
  Rng init(1);
  auto model = ModelParams<double>::create(cfg, init);
  TrainConfig tc;
  tc.epochs = 500;
  tc.adam.lr = 1e-3;
  tc.seed = 3;
  const auto h = train(model, cfg, one, tc);
  ASSERT_EQ(h.size(), 500u);
  EXPECT_LE(h.back().loss, 0.1 * h.front().loss)
      << "first " << h.front().loss << " last " << h.back().loss;
}

TEST_P(TrainLoop, ZeroLearningRateKeepsLossConstant) {
  const MaskerConfig cfg = tiny_no_dropout(GetParam());
  const auto segs = tiny_segments(cfg, 8);
  Rng init(2);
  auto model = ModelParams<double>::create(cfg, init);
  TrainConfig tc;
  tc.epochs = 5;
  tc.adam.lr = 0.0;
  // A single example gives a bitwise-constant trace.
  const auto h1 = train(model, cfg, {segs[0]}, tc);
  for (const auto& r : h1) EXPECT_EQ(r.loss, h1.front().loss);
  // With the whole set in one batch, batch-norm statistics do not depend on
  // the shuffle and only the summation order changes.
  tc.batch = segs.size();
  const auto h = train(model, cfg, segs, tc);
  for (const auto& r : h) EXPECT_NEAR(r.loss, h.front().loss, 1e-12 * h.front().loss);
}

TEST_P(TrainLoop, DeterministicUnderSeed) {
  const MaskerConfig cfg = MaskerConfig::tiny(GetParam());
  const auto segs = tiny_segments(cfg, 9);
  auto run = [&] {
    Rng init(4);
    auto model = ModelParams<double>::create(cfg, init);
    TrainConfig tc;
    tc.epochs = 4;
    tc.seed = 11;
    tc.adam.lr = 1e-3;
    auto h = train(model, cfg, segs, tc);
    return std::make_pair(h, model);
  };
  const auto [h1, m1] = run();
  const auto [h2, m2] = run();
  ASSERT_EQ(h1.size(), h2.size());
  for (std::size_t i = 0; i < h1.size(); ++i) {
    EXPECT_EQ(h1[i].loss, h2[i].loss);
    EXPECT_EQ(h1[i].grad_norm, h2[i].grad_norm);
  }
  EXPECT_EQ(m1.masker.params, m2.masker.params);
  EXPECT_EQ(m1.masker.buffers, m2.masker.buffers);
  EXPECT_EQ(m1.denoiser.params, m2.denoiser.params);
}

INSTANTIATE_TEST_SUITE_P(Training, TrainLoop, ::testing::Values(Variant::kRnn, Variant::kDwsCnn),
                         [](const auto& info) {
                           return std::string(info.param == Variant::kRnn ? "Rnn" : "DwsCnn");
                         });

TEST(TrainLoopMisc, KeepsLastPartialBatch) {
  const MaskerConfig cfg = MaskerConfig::tiny(Variant::kRnn);
  auto segs = tiny_segments(cfg, 10);
  segs.resize(5);
  Rng init(5);
  auto model = ModelParams<double>::create(cfg, init);
  TrainConfig tc;
  tc.epochs = 2;
  const auto h = train(model, cfg, segs, tc);
  for (const auto& r : h) EXPECT_EQ(r.batches, 2u);
}

TEST(TrainLoopMisc, ZeroEpochsLeavesModelUntouched) {
  const MaskerConfig cfg = MaskerConfig::tiny(Variant::kDwsCnn);
  const auto segs = tiny_segments(cfg, 10);
  Rng init(5);
  auto model = ModelParams<double>::create(cfg, init);
  const auto before = model.masker.params;
  TrainConfig tc;
  tc.epochs = 0;
  EXPECT_TRUE(train(model, cfg, segs, tc).empty());
  EXPECT_EQ(model.masker.params, before);
}

TEST(TrainLoopMisc, CallbackCanStopEarly) {
  const MaskerConfig cfg = MaskerConfig::tiny(Variant::kRnn);
  const auto segs = tiny_segments(cfg, 10);
  Rng init(5);
  auto model = ModelParams<double>::create(cfg, init);
  TrainConfig tc;
  tc.epochs = 10;
  const auto h = train(model, cfg, segs, tc, [](const EpochRecord& r) { return r.epoch < 3; });
  EXPECT_EQ(h.size(), 3u);
}

TEST(TrainLoopMisc, NonFiniteObjectiveAbortsWithDiagnostic) {
  const MaskerConfig cfg = MaskerConfig::tiny(Variant::kRnn);
  const auto segs = tiny_segments(cfg, 10);
  Rng init(5);
  auto model = ModelParams<double>::create(cfg, init);
  for (double& w : model.denoiser.param("fnn_d1.weight").data()) w = 1e200;
  for (double& w : model.denoiser.param("fnn_d2.weight").data()) w = 1e200;
  TrainConfig tc;
  tc.epochs = 1;
  try {
    train(model, cfg, segs, tc);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("masker_gkl="), std::string::npos) << msg;
  }
}

TEST(TrainLoopMisc, RejectsEmptyDatasetAndBadConfig) {
  const MaskerConfig cfg = MaskerConfig::tiny(Variant::kRnn);
  Rng init(5);
  auto model = ModelParams<double>::create(cfg, init);
  EXPECT_THROW(train(model, cfg, {}, TrainConfig{}), std::invalid_argument);
  TrainConfig tc;
  tc.batch = 0;
  EXPECT_THROW(train(model, cfg, tiny_segments(cfg, 1), tc), std::invalid_argument);
}

TEST(TrainLoopMisc, SinglePrecisionTrains) {
  const MaskerConfig cfg = MaskerConfig::tiny(Variant::kDwsCnn);
  const auto segs = tiny_segments(cfg, 12);
  Rng init(6);
  auto model = ModelParams<float>::create(cfg, init);
  TrainConfig tc;
  tc.epochs = 20;
  tc.adam.lr = 1e-3;
  const auto h = train(model, cfg, segs, tc);
  EXPECT_LT(h.back().loss, h.front().loss);
}

// ---------------------------------------------------------------------------

TEST(Synthetic, MixtureIsExactSumOnTheQuantisationGrid) {
  const auto tracks = make_synthetic_dataset(1, 2, 2.5);
  ASSERT_EQ(tracks.size(), 2u);
  for (const auto& t : tracks) {
    ASSERT_EQ(t.mixture.size(), static_cast<std::size_t>(2.5 * 44100));
    for (std::size_t i = 0; i < t.mixture.size(); ++i) {
      ASSERT_EQ(t.mixture.samples[i] - t.voice.samples[i] - t.accompaniment.samples[i], 0.0);
      const double k = t.mixture.samples[i] * 32768.0;
      ASSERT_EQ(k, std::round(k));
      ASSERT_LT(std::abs(t.mixture.samples[i]), 1.0);
      // float storage is also exact
      ASSERT_EQ(static_cast<double>(static_cast<float>(t.voice.samples[i])), t.voice.samples[i]);
    }
  }
}

TEST(Synthetic, DeterministicAndSeedSensitive) {
  const auto a = make_synthetic_dataset(5, 1, 2.0);
  const auto b = make_synthetic_dataset(5, 1, 2.0);
  const auto c = make_synthetic_dataset(6, 1, 2.0);
  EXPECT_EQ(a[0].mixture.samples, b[0].mixture.samples);
  EXPECT_NE(a[0].mixture.samples, c[0].mixture.samples);
}

TEST(Synthetic, RejectsShortDurations) {
  EXPECT_THROW(make_synthetic_dataset(1, 1, 1.0), std::invalid_argument);
  EXPECT_THROW(make_synthetic_dataset(1, 1, 1.99), std::invalid_argument);
}

double band_energy(const signal::Spectrogram& s, double lo_hz, double hi_hz) {
  const double bin_hz = s.sample_rate / static_cast<double>(s.config.fft_len);
  double e = 0.0;
  for (std::size_t t = 0; t < s.frames; ++t)
    for (std::size_t k = 0; k < s.bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      if (f >= lo_hz && f <= hi_hz) e += std::pow(s.magnitude[t * s.bins + k], 2);
    }
  return e;
}

TEST(Synthetic, SourcesOccupyDesignatedBands) {
  const auto t = make_synthetic_dataset(2, 1, 3.0)[0];
  const auto v = signal::stft(t.voice);
  const auto a = signal::stft(t.accompaniment);
  const double v_total = band_energy(v, 0.0, 1e9), a_total = band_energy(a, 0.0, 1e9);
  // Voice energy outside its band, with a guard of a few bins for the window's main lobe.
  EXPECT_LT(band_energy(v, 0.0, kVoiceLowHz - 60.0) + band_energy(v, kVoiceHighHz + 60.0, 1e9),
            1e-3 * v_total);
  // Accompaniment energy inside the voice band.
  EXPECT_LT(band_energy(a, kVoiceLowHz + 60.0, kVoiceHighHz + 60.0), 1e-3 * a_total);
}

TEST(Synthetic, MixtureDominatesWherePhasesAgree) {
  // Where the source coefficients point into the same half-plane,
  // |V + A|^2 = |V|^2 + |A|^2 + 2 Re(V conj A) >= max(|V|^2, |A|^2).
  const auto t = make_synthetic_dataset(3, 1, 2.0)[0];
  const auto m = signal::stft(t.mixture), v = signal::stft(t.voice), a = signal::stft(t.accompaniment);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < m.magnitude.size(); ++i) {
    const auto cv = std::polar(v.magnitude[i], v.phase[i]);
    const auto ca = std::polar(a.magnitude[i], a.phase[i]);
    if ((cv * std::conj(ca)).real() < 0.0) continue;
    ++checked;
    const double tol = 1e-9 * (1.0 + v.magnitude[i] + a.magnitude[i]);
    ASSERT_GE(m.magnitude[i] + tol, v.magnitude[i]) << i;
    ASSERT_GE(m.magnitude[i] + tol, a.magnitude[i]) << i;
  }
  EXPECT_GT(checked, m.magnitude.size() / 4);
}

}  // namespace
}  // namespace madsep::training
