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

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "madsep/bss_eval.hpp"
#include "madsep/models.hpp"
#include "madsep/nn.hpp"
#include "madsep/signal.hpp"
#include "madsep/training.hpp"

namespace {

using namespace madsep;

template <typename T>
Tensor<T> noise(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<T> t = Tensor<T>::zeros(std::move(shape));
  for (T& v : t.data()) v = static_cast<T>(rng.uniform(0.0, 1.0));
  return t;
}

// Frames x F = 60 x 2049 through the denoiser's first layer, forward and backward.
template <typename T>
void BM_LinearForwardBackward(benchmark::State& state) {
  const std::size_t F = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  auto store = nn::LayerParams<T>::create(nn::linear_spec("fc", F, F / 2), rng);
  const auto x = noise<T>({60, F}, 2);
  for (auto _ : state) {
    Tape<T> tape;
    nn::Binding<T> p(tape, store, true);
    auto y = nn::linear(tape.constant(x), p, "fc");
    tape.backward(ops::sum(y));
    benchmark::DoNotOptimize(p.grads());
  }
  state.SetItemsProcessed(state.iterations() * 60);
}
BENCHMARK(BM_LinearForwardBackward<float>)->Arg(513)->Arg(2049)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LinearForwardBackward<double>)->Arg(513)->Arg(2049)->Unit(benchmark::kMillisecond);

void BM_GruSequence(benchmark::State& state) {
  const std::size_t H = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  auto store = nn::LayerParams<double>::create(nn::gru_spec("gru", H, H), rng);
  const auto x = noise<double>({4, 70, H}, 4);
  for (auto _ : state) {
    Tape<double> tape;
    nn::Binding<double> p(tape, store, false);
    benchmark::DoNotOptimize(nn::gru_sequence(tape.constant(x), p, "gru").value());
  }
  state.SetItemsProcessed(state.iterations() * 4 * 70);
}
BENCHMARK(BM_GruSequence)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_DwsBlock(benchmark::State& state) {
  const std::size_t C = static_cast<std::size_t>(state.range(0));
  nn::DwsBlockConfig cfg{C, C, 5, 5};
  Rng rng(5);
  auto store = nn::LayerParams<double>::create(nn::dws_block_spec("blk", cfg), rng);
  const auto x = noise<double>({1, C, 70, 64}, 6);
  for (auto _ : state) {
    Tape<double> tape;
    nn::Binding<double> p(tape, store, false);
    benchmark::DoNotOptimize(
        nn::dws_block(tape.constant(x), cfg, p, "blk", nn::Mode::kEval).value());
  }
}
BENCHMARK(BM_DwsBlock)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_MadForwardTiny(benchmark::State& state) {
  const auto variant = state.range(0) == 0 ? models::Variant::kRnn : models::Variant::kDwsCnn;
  const auto cfg = models::MaskerConfig::tiny(variant);
  Rng rng(7);
  auto params = models::ModelParams<double>::create(cfg, rng);
  const auto v = noise<double>({4, cfg.T + cfg.L, cfg.F}, 8);
  for (auto _ : state) {
    Tape<double> tape;
    nn::Binding<double> m(tape, params.masker, false);
    nn::Binding<double> d(tape, params.denoiser, false);
    benchmark::DoNotOptimize(
        models::mad_forward(tape.constant(v), cfg, m, d, models::Mode::kEval, rng)
            .denoised.value());
  }
  state.SetLabel(models::to_string(variant));
}
BENCHMARK(BM_MadForwardTiny)->Arg(0)->Arg(1);

void BM_StftRoundTrip(benchmark::State& state) {
  const double seconds = static_cast<double>(state.range(0));
  signal::AudioClip clip;
  const auto n = static_cast<std::size_t>(seconds * clip.sample_rate);
  Rng rng(9);
  clip.samples.resize(n);
  for (double& s : clip.samples) s = rng.uniform(-0.5, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(signal::istft(signal::stft(clip)).samples);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_StftRoundTrip)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_BssDecompose(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(10);
  std::vector<double> s(n), e(n), i(n);
  for (std::size_t k = 0; k < n; ++k) {
    s[k] = rng.normal();
    i[k] = rng.normal();
    e[k] = s[k] + 0.3 * i[k] + 0.1 * rng.normal();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(bss::decompose(e, s, {std::span<const double>(i)}));
  }
}
BENCHMARK(BM_BssDecompose)->Arg(44100)->Arg(44100 * 30)->Unit(benchmark::kMillisecond);

void BM_Gkl(benchmark::State& state) {
  const auto x = noise<double>({60, 2049}, 11);
  const auto y = noise<double>({60, 2049}, 12);
  for (auto _ : state) benchmark::DoNotOptimize(training::gkl(x, y));
}
BENCHMARK(BM_Gkl);

}  // namespace
BENCHMARK_MAIN();
