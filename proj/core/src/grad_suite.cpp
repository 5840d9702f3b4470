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

#include "madsep/grad_suite.hpp"

#include <algorithm>

#include "madsep/models.hpp"
#include "madsep/nn.hpp"
#include "madsep/ops.hpp"
#include "madsep/rng.hpp"
#include "madsep/training.hpp"

namespace madsep {
namespace {

using TensorD = Tensor<double>;
using nn::Binding;
using nn::Mode;

TensorD uniform(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  TensorD t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Entries of magnitude in [0.1, 1] with random sign, clear of ReLU kinks.
TensorD away_from_zero(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  TensorD t(std::move(shape));
  for (double& v : t.data()) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.1, 1.0);
  return t;
}

nn::LayerParams<double> params(const nn::ParamSpecs& specs, std::uint64_t seed) {
  Rng rng(seed);
  return nn::LayerParams<double>::create(specs, rng);
}

using LayerFn = std::function<Var<double>(Tape<double>&, const Var<double>&, Binding<double>&)>;

// Checks a layer with respect to its input and all trainable parameters.
GradCheckReport check_layer(const TensorD& x, nn::LayerParams<double> store, const LayerFn& fwd,
                            const GradCheckOptions& opt) {
  std::vector<std::string> names;
  std::vector<TensorD> inputs{x};
  for (const auto& [name, t] : store.params) {
    names.push_back(name);
    inputs.push_back(t);
  }
  return grad_check(
      [&](Tape<double>& tape, const std::vector<Var<double>>& v) {
        Binding<double> b(tape, store, false);
        for (std::size_t i = 0; i < names.size(); ++i) b.set(names[i], v[i + 1]);
        return fwd(tape, v[0], b);
      },
      inputs, opt);
}

Var<double> sq(const Var<double>& y) { return ops::sum(ops::square(y)); }

// Full tiny model with output biases lifted by one, which keeps most ReLU
// units away from their kink.
GradCheckReport check_model(models::Variant variant, Mode mode, bool with_loss) {
  const models::MaskerConfig cfg = models::MaskerConfig::tiny(variant);
  Rng init(3);
  auto m = models::ModelParams<double>::create(cfg, init);
  for (auto* b : {&m.masker.param("fnn_m.bias"), &m.denoiser.param("fnn_d1.bias"),
                  &m.denoiser.param("fnn_d2.bias")}) {
    for (double& x : b->data()) x += 1.0;
  }
  const TensorD v = uniform({2, cfg.T + cfg.L, cfg.F}, 21, 0.1, 1.0);
  const TensorD target = uniform({2, cfg.T, cfg.F}, 22, 0.0, 1.0);
  const TensorD w1 = uniform({2, cfg.T, cfg.F}, 23), w2 = uniform({2, cfg.T, cfg.F}, 24);
  std::vector<std::string> mn, dn;
  std::vector<TensorD> inputs{v};
  for (const auto& [n, t] : m.masker.params) {
    mn.push_back(n);
    inputs.push_back(t);
  }
  for (const auto& [n, t] : m.denoiser.params) {
    dn.push_back(n);
    inputs.push_back(t);
  }
  auto f = [&](Tape<double>& tape, const std::vector<Var<double>>& in) {
    Binding<double> bm(tape, m.masker, false), bd(tape, m.denoiser, false);
    for (std::size_t i = 0; i < mn.size(); ++i) bm.set(mn[i], in[1 + i]);
    for (std::size_t i = 0; i < dn.size(); ++i) bd.set(dn[i], in[1 + mn.size() + i]);
    Rng rng(5);  // same dropout mask on every evaluation
    const auto out = models::mad_forward(in[0], cfg, bm, bd, mode, rng);
    if (with_loss) {
      return training::mad_loss(target, out.masker.estimate, out.denoised,
                                bm(models::kMaskerOutputWeight), bd(models::kDenoiserOutputWeight))
          .value;
    }
    return ops::sum(out.masker.estimate * tape.constant(w1)) +
           ops::sum(out.denoised * tape.constant(w2));
  };
  if (with_loss) inputs.erase(inputs.begin());  // the loss case varies parameters only
  auto g = [&](Tape<double>& tape, const std::vector<Var<double>>& in) {
    if (!with_loss) return f(tape, in);
    std::vector<Var<double>> all{tape.constant(v)};
    all.insert(all.end(), in.begin(), in.end());
    return f(tape, all);
  };
  return grad_check(g, inputs,
                    {.step = 1e-6, .tolerance = 1e-4, .coords_per_input = 24, .scale_floor = 1e-3});
}

}  // namespace

bool GradSuiteResult::pass() const {
  return std::all_of(cases.begin(), cases.end(), [](const auto& c) { return c.report.pass; });
}

GradSuiteResult run_grad_suite(const std::function<void(const GradSuiteCase&)>& on_case) {
  GradSuiteResult result;
  auto add = [&](std::string name, double tol, const std::function<GradCheckReport(double)>& run) {
    GradSuiteCase c{std::move(name), tol, run(tol)};
    if (on_case) on_case(c);
    result.cases.push_back(std::move(c));
  };

  add("linear", 1e-6, [](double tol) {
    return check_layer(uniform({3, 5}, 5), params(nn::linear_spec("fc", 5, 4), 6),
                       [](Tape<double>&, const Var<double>& x, Binding<double>& b) {
                         return sq(nn::linear(x, b, "fc"));
                       },
                       {.tolerance = tol});
  });
  add("gru_cell (3 unrolled steps)", 1e-5, [](double tol) {
    return check_layer(uniform({2, 3, 4}, 13), params(nn::gru_spec("g", 4, 3), 14),
                       [](Tape<double>& t, const Var<double>& x, Binding<double>& b) {
                         Var<double> h = t.constant(TensorD(Shape{2, 3}));
                         for (std::size_t s = 0; s < 3; ++s) {
                           h = nn::gru_cell(ops::reshape(ops::slice(x, 1, s, s + 1), {2, 4}), h,
                                            b, "g");
                         }
                         return sq(h);
                       },
                       {.tolerance = tol});
  });
  add("gru_sequence", 1e-5, [](double tol) {
    return check_layer(uniform({2, 4, 3}, 15), params(nn::gru_spec("g", 3, 3), 16),
                       [](Tape<double>&, const Var<double>& x, Binding<double>& b) {
                         return sq(nn::gru_sequence(x, b, "g"));
                       },
                       {.tolerance = tol});
  });
  add("depthwise_conv", 1e-6, [](double tol) {
    return check_layer(uniform({2, 2, 5, 6}, 17), params(nn::depthwise_spec("dw", 2, 3, 3), 18),
                       [](Tape<double>&, const Var<double>& x, Binding<double>& b) {
                         return sq(nn::depthwise_conv(x, b, "dw", 1, 1));
                       },
                       {.tolerance = tol});
  });
  add("pointwise_conv", 1e-6, [](double tol) {
    return check_layer(uniform({2, 3, 2, 3}, 22), params(nn::pointwise_spec("pw", 3, 2), 23),
                       [](Tape<double>&, const Var<double>& x, Binding<double>& b) {
                         return sq(nn::pointwise_conv(x, b, "pw"));
                       },
                       {.tolerance = tol});
  });
  add("transposed_conv", 1e-5, [](double tol) {
    return check_layer(uniform({2, 2, 4, 5}, 35),
                       params(nn::transposed_conv_spec("tc", 2, 3, 3, 3), 36),
                       [](Tape<double>&, const Var<double>& x, Binding<double>& b) {
                         return sq(nn::transposed_conv(
                             x, b, "tc",
                             {.stride_h = 1, .stride_w = 2, .pad_h = 1, .pad_w = 1,
                              .output_pad_h = 0, .output_pad_w = 1}));
                       },
                       {.tolerance = tol});
  });
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    add(mode == Mode::kTrain ? "batch_norm (train)" : "batch_norm (eval)", 1e-5,
        [mode](double tol) {
          auto p = params(nn::batch_norm_spec("bn", 2), 1);
          p.param("bn.gamma") = TensorD::vector({0.7, 1.3});
          p.param("bn.beta") = TensorD::vector({0.1, -0.2});
          p.buffer("bn.running_mean") = TensorD::vector({0.2, -0.1});
          p.buffer("bn.running_var") = TensorD::vector({0.5, 2.0});
          const TensorD w = uniform({3, 2, 2, 3}, 25);
          return check_layer(uniform({3, 2, 2, 3}, 26), p,
                             [&](Tape<double>& t, const Var<double>& x, Binding<double>& b) {
                               return ops::sum(nn::batch_norm(x, b, "bn", mode) * t.constant(w));
                             },
                             {.tolerance = tol});
        });
  }
  add("max_pool", 1e-6, [](double tol) {
    return grad_check([](Tape<double>&, const Var<double>& v) { return sq(nn::max_pool(v, 2, 3)); },
                      uniform({1, 2, 4, 6}, 28), {.tolerance = tol});
  });
  add("relu / lrelu", 1e-6, [](double tol) {
    return grad_check(
        [](Tape<double>&, const Var<double>& v) {
          return sq(nn::relu(v)) + sq(nn::lrelu(v, 1e-2));
        },
        away_from_zero({4, 6}, 29), {.tolerance = tol, .scale_floor = 1e-3});
  });
  add("dropout (train, fixed mask)", 1e-6, [](double tol) {
    return grad_check(
        [](Tape<double>&, const Var<double>& v) {
          Rng rng(30);
          return sq(nn::dropout(v, 0.25, Mode::kTrain, rng));
        },
        uniform({4, 6}, 31), {.tolerance = tol});
  });
  add("dws_block (train)", 1e-4, [](double tol) {
    const nn::DwsBlockConfig cfg{.in_channels = 2, .out_channels = 3, .kernel_h = 3, .kernel_w = 3};
    const TensorD w = uniform({2, 3, 4, 5}, 40);
    return check_layer(uniform({2, 2, 4, 5}, 41, -2.0, 2.0), params(nn::dws_block_spec("blk", cfg), 42),
                       [&](Tape<double>& t, const Var<double>& x, Binding<double>& b) {
                         return ops::sum(nn::dws_block(x, cfg, b, "blk", Mode::kTrain) *
                                         t.constant(w));
                       },
                       {.tolerance = tol});
  });
  add("gkl(v || x * m)", 1e-5, [](double tol) {
    const TensorD v = uniform({3, 7}, 6, 0.0, 2.0), x = uniform({3, 7}, 7, 0.5, 1.5);
    return grad_check(
        [&](Tape<double>& t, const Var<double>& m) { return training::gkl(v, t.constant(x) * m); },
        uniform({3, 7}, 8, 0.2, 1.2), {.tolerance = tol});
  });
  for (auto variant : {models::Variant::kRnn, models::Variant::kDwsCnn}) {
    const std::string tag = models::to_string(variant);
    add("model " + tag + " (train)", 1e-4,
        [variant](double) { return check_model(variant, Mode::kTrain, false); });
    add("model " + tag + " (eval)", 1e-4,
        [variant](double) { return check_model(variant, Mode::kEval, false); });
    add("objective " + tag, 1e-4, [variant](double) { return check_model(variant, Mode::kTrain, true); });
  }
  return result;
}

}  // namespace madsep
