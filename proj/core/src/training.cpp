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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "madsep/ops.hpp"
#include "madsep/rng.hpp"

namespace madsep::training {
namespace {

template <typename T>
void check_gkl_operands(const Tensor<T>& x, const Tensor<T>& y) {
  if (x.shape() != y.shape()) {
    throw std::invalid_argument("gkl: shape mismatch " + shape_str(x.shape()) + " vs " +
                                shape_str(y.shape()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < T{0} || y[i] < T{0}) {
      throw std::invalid_argument("gkl: negative entry at flat index " + std::to_string(i));
    }
  }
}

template <typename T>
double gkl_sum(const Tensor<T>& x, const Tensor<T>& y, double eps) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i], b = y[i];
    if (a > 0.0) s += a * std::log((a + eps) / (b + eps));
    s += b - a;
  }
  return s;
}

template <typename T>
Tensor<T> stack(const std::vector<signal::SegmentPair>& data,
                const std::vector<std::size_t>& idx, bool inputs) {
  const Tensor<double>& first = inputs ? data[idx[0]].mixture_in : data[idx[0]].target;
  Shape shape{idx.size()};
  shape.insert(shape.end(), first.shape().begin(), first.shape().end());
  Tensor<T> out(shape);
  const std::size_t n = first.size();
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const Tensor<double>& src = inputs ? data[idx[b]].mixture_in : data[idx[b]].target;
    if (src.shape() != first.shape()) {
      throw std::invalid_argument("train: segment " + std::to_string(idx[b]) + " has shape " +
                                  shape_str(src.shape()) + ", expected " +
                                  shape_str(first.shape()));
    }
    for (std::size_t i = 0; i < n; ++i) out[b * n + i] = static_cast<T>(src[i]);
  }
  return out;
}

std::string describe(const LossTerms& t) {
  std::ostringstream os;
  os << "masker_gkl=" << t.masker_gkl << " denoiser_gkl=" << t.denoiser_gkl
     << " diag_penalty=" << t.diag_penalty << " weight_penalty=" << t.weight_penalty;
  return os.str();
}

}  // namespace

void LossConfig::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
    throw std::invalid_argument("LossConfig: lambda1 and lambda2 must be nonnegative");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("LossConfig: eps must be positive");
}

void TrainConfig::validate() const {
  if (batch == 0) throw std::invalid_argument("TrainConfig: batch must be positive");
  if (!(adam.lr >= 0.0)) throw std::invalid_argument("TrainConfig: lr must be nonnegative");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("TrainConfig: clip_norm must be positive");
  loss.validate();
}

template <typename T>
Var<T> gkl(const Tensor<T>& x, const Var<T>& y, double eps) {
  check_gkl_operands(x, y.value());
  const double value = gkl_sum(x, y.value(), eps);
  const NodeId iy = y.id();
  return y.tape().record(
      "gkl", Tensor<T>::scalar(static_cast<T>(value)), {iy},
      [iy, x, eps](Tape<T>& tp, const Tensor<T>& g) {
        const Tensor<T>& yv = tp.value(iy);
        Tensor<T> gy(yv.shape());
        const double up = g.item();
        for (std::size_t i = 0; i < gy.size(); ++i) {
          gy[i] = static_cast<T>(up * (1.0 - static_cast<double>(x[i]) / (yv[i] + eps)));
        }
        tp.accumulate(iy, gy);
      });
}

template <typename T>
double gkl(const Tensor<T>& x, const Tensor<T>& y, double eps) {
  check_gkl_operands(x, y);
  return gkl_sum(x, y, eps);
}

template <typename T>
Loss<T> mad_loss(const Tensor<T>& target, const Var<T>& masker_estimate,
                 const Var<T>& denoised, const Var<T>& masker_weight,
                 const Var<T>& denoiser_weight, const LossConfig& cfg) {
  cfg.validate();
  const Var<T> g1 = gkl(target, masker_estimate, cfg.eps);
  const Var<T> g2 = gkl(target, denoised, cfg.eps);
  const Var<T> r1 = ops::scale(ops::sum(ops::abs(ops::diag(masker_weight))),
                               static_cast<T>(cfg.lambda1));
  const Var<T> r2 = ops::scale(ops::sum(ops::square(denoiser_weight)),
                               static_cast<T>(cfg.lambda2));
  Loss<T> out;
  out.value = g1 + g2 + r1 + r2;
  out.terms.masker_gkl = g1.value().item();
  out.terms.denoiser_gkl = g2.value().item();
  out.terms.diag_penalty = r1.value().item();
  out.terms.weight_penalty = r2.value().item();
  return out;
}

template <typename T>
double global_norm(const TensorMap<T>& grads) {
  double s = 0.0;
  for (const auto& [name, g] : grads) {
    for (T v : g.data()) s += static_cast<double>(v) * static_cast<double>(v);
  }
  return std::sqrt(s);
}

template <typename T>
double clip_grad_norm(TensorMap<T>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& [name, g] : grads) {
      for (T& v : g.data()) v = static_cast<T>(v * f);
    }
  }
  return norm;
}

template <typename T>
void Adam<T>::step(const std::vector<Group>& groups) {
  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (const Group& grp : groups) {
    for (const auto& [name, g] : *grp.grads) {
      auto it = grp.params->find(name);
      if (it == grp.params->end() || it->second.shape() != g.shape()) {
        throw std::invalid_argument("Adam: gradient '" + grp.prefix + name +
                                    "' has no parameter of matching shape");
      }
      Tensor<T>& p = it->second;
      const std::string key = grp.prefix + name;
      auto& m = m_[key];
      auto& v = v_[key];
      if (m.empty()) {
        m.assign(p.size(), 0.0);
        v.assign(p.size(), 0.0);
      }
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = g[i];
        m[i] = b1 * m[i] + (1.0 - b1) * gi;
        v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
        const double update = cfg_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
        p[i] = static_cast<T>(p[i] - update);
      }
    }
  }
}

template <typename T>
std::vector<EpochRecord> train(models::ModelParams<T>& model, const models::MaskerConfig& cfg,
                               const std::vector<signal::SegmentPair>& dataset,
                               const TrainConfig& tc, const EpochCallback& on_epoch) {
  tc.validate();
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train: dataset is empty");

  Rng rng(tc.seed);
  Adam<T> adam(tc.adam);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochRecord> history;
  LossTerms last_terms;

  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng.engine());
    double loss_sum = 0.0, norm_sum = 0.0;
    std::size_t batches = 0;

    for (std::size_t begin = 0; begin < order.size(); begin += tc.batch) {
      const std::size_t end = std::min(order.size(), begin + tc.batch);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
      const Tensor<T> v = stack<T>(dataset, idx, true);
      const Tensor<T> target = stack<T>(dataset, idx, false);

      Tape<T> tape;
      nn::Binding<T> bm(tape, model.masker, true);
      nn::Binding<T> bd(tape, model.denoiser, true);
      Loss<T> loss;
      try {
        const auto out = models::mad_forward(tape.constant(v), cfg, bm, bd, nn::Mode::kTrain, rng);
        loss = mad_loss(target, out.masker.estimate, out.denoised, bm(models::kMaskerOutputWeight),
                        bd(models::kDenoiserOutputWeight), tc.loss);
        if (!std::isfinite(loss.terms.total())) throw NumericError("loss is not finite");
        tape.backward(loss.value);
      } catch (const NumericError& e) {
        std::ostringstream os;
        os << "non-finite objective at epoch " << epoch << ", batch " << batches + 1 << " ("
           << e.what() << "); last finite terms: " << describe(last_terms);
        throw TrainingError(os.str());
      }
      last_terms = loss.terms;

      TensorMap<T> gm = bm.grads(), gd = bd.grads();
      TensorMap<T> all;
      for (auto& [n, g] : gm) all.emplace("masker/" + n, std::move(g));
      for (auto& [n, g] : gd) all.emplace("denoiser/" + n, std::move(g));
      const double norm = clip_grad_norm(all, tc.clip_norm);
      if (!std::isfinite(norm)) {
        throw TrainingError("non-finite gradient norm at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batches + 1) +
                            "; terms: " + describe(loss.terms));
      }
      gm.clear();
      gd.clear();
      for (auto& [n, g] : all) {
        if (n.rfind("masker/", 0) == 0) {
          gm.emplace(n.substr(7), std::move(g));
        } else {
          gd.emplace(n.substr(9), std::move(g));
        }
      }
      adam.step({{"masker/", &model.masker.params, &gm}, {"denoiser/", &model.denoiser.params, &gd}});

      loss_sum += loss.terms.total();
      norm_sum += norm;
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(batches);
    rec.grad_norm = norm_sum / static_cast<double>(batches);
    rec.batches = batches;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                      .count();
    history.push_back(rec);
    if (on_epoch && !on_epoch(rec)) break;
  }
  return history;
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Raised-cosine attack and release.
double envelope(double t, double length, double attack, double release) {
  if (t < 0.0 || t >= length) return 0.0;
  double e = 1.0;
  if (t < attack) e = 0.5 - 0.5 * std::cos(std::numbers::pi * t / attack);
  if (length - t < release) {
    e = std::min(e, 0.5 - 0.5 * std::cos(std::numbers::pi * (length - t) / release));
  }
  return e;
}

std::vector<double> make_voice(Rng& rng, std::size_t n, double fs) {
  std::vector<double> y(n, 0.0);
  const double duration = static_cast<double>(n) / fs;
  double t0 = 0.0;
  while (t0 < duration) {
    const double len = rng.uniform(0.25, 0.6);
    const bool rest = rng.uniform() < 0.15;
    if (!rest) {
      const double f0 = rng.uniform(1.05 * kVoiceLowHz, 2.1 * kVoiceLowHz);
      const double vib_rate = rng.uniform(4.5, 6.5);
      const double vib_depth = rng.uniform(0.005, 0.02);
      const double vib_phase = rng.uniform(0.0, kTwoPi);
      std::vector<double> gains;
      for (std::size_t k = 1; k * f0 * (1.0 + vib_depth) < 0.98 * kVoiceHighHz; ++k) {
        gains.push_back(rng.uniform(0.5, 1.0) / static_cast<double>(k));
      }
      const std::size_t s0 = static_cast<std::size_t>(t0 * fs);
      const std::size_t s1 = std::min(n, static_cast<std::size_t>((t0 + len) * fs));
      double phase = 0.0;
      for (std::size_t s = s0; s < s1; ++s) {
        const double t = static_cast<double>(s - s0) / fs;
        const double f = f0 * (1.0 + vib_depth * std::sin(kTwoPi * vib_rate * t + vib_phase));
        phase += kTwoPi * f / fs;
        double acc = 0.0;
        for (std::size_t k = 0; k < gains.size(); ++k) {
          acc += gains[k] * std::sin(static_cast<double>(k + 1) * phase);
        }
        y[s] += envelope(t, len, 0.02, 0.05) * acc;
      }
    }
    t0 += len;
  }
  return y;
}

// Windowed-sinc band-pass FIR applied to white Gaussian noise.
std::vector<double> band_noise(Rng& rng, std::size_t n, double fs, double lo, double hi) {
  constexpr std::size_t kTaps = 511;
  constexpr std::ptrdiff_t kHalf = kTaps / 2;
  std::vector<double> h(kTaps);
  const double a = lo / fs, b = hi / fs;
  for (std::size_t i = 0; i < kTaps; ++i) {
    const double m = static_cast<double>(static_cast<std::ptrdiff_t>(i) - kHalf);
    auto lowpass = [m](double fc) {
      return m == 0.0 ? 2.0 * fc : std::sin(kTwoPi * fc * m) / (std::numbers::pi * m);
    };
    const double w = 0.54 - 0.46 * std::cos(kTwoPi * static_cast<double>(i) / (kTaps - 1));
    h[i] = (lowpass(b) - lowpass(a)) * w;
  }
  std::vector<double> x(n + kTaps);
  for (double& v : x) v = rng.normal();
  std::vector<double> y(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    double acc = 0.0;
    for (std::size_t k = 0; k < kTaps; ++k) acc += h[k] * x[s + k];
    y[s] = acc;
  }
  return y;
}

std::vector<double> make_accompaniment(Rng& rng, std::size_t n, double fs) {
  std::vector<double> y(n, 0.0);
  const double duration = static_cast<double>(n) / fs;
  // Bass line: two partials per note, both below the voice band.
  double t0 = 0.0;
  while (t0 < duration) {
    const double len = rng.uniform(0.4, 1.0);
    const double f = rng.uniform(50.0, 0.48 * kVoiceLowHz);
    const std::size_t s0 = static_cast<std::size_t>(t0 * fs);
    const std::size_t s1 = std::min(n, static_cast<std::size_t>((t0 + len) * fs));
    for (std::size_t s = s0; s < s1; ++s) {
      const double t = static_cast<double>(s - s0) / fs;
      const double e = envelope(t, len, 0.01, 0.1);
      y[s] += e * (std::sin(kTwoPi * f * t) + 0.5 * std::sin(kTwoPi * 2.0 * f * t));
    }
    t0 += len;
  }
  // Percussive noise bursts in the high band.
  const std::vector<double> noise = band_noise(rng, n, fs, kNoiseLowHz, kNoiseHighHz);
  const double beat = rng.uniform(0.2, 0.35);
  for (std::size_t s = 0; s < n; ++s) {
    const double t = std::fmod(static_cast<double>(s) / fs, beat);
    y[s] += 0.8 * noise[s] * (0.3 + std::exp(-t / 0.04));
  }
  return y;
}

// Scales to the given peak and rounds every sample to a multiple of 2^-15.
signal::AudioClip finish(std::vector<double> y, double peak, double fs) {
  double m = 0.0;
  for (double v : y) m = std::max(m, std::abs(v));
  const double g = m > 0.0 ? peak / m : 0.0;
  for (double& v : y) v = signal::quantize_pcm16(v * g);
  return signal::AudioClip{std::move(y), fs};
}

}  // namespace

std::vector<SyntheticTrack> make_synthetic_dataset(std::uint64_t seed, std::size_t n_tracks,
                                                   double duration_s, double sample_rate) {
  if (!(duration_s >= 2.0)) {
    throw std::invalid_argument("make_synthetic_dataset: duration must be at least 2 s");
  }
  if (!(sample_rate > 2.0 * kNoiseHighHz)) {
    throw std::invalid_argument("make_synthetic_dataset: sample rate too low for the noise band");
  }
  Rng master(seed);
  std::vector<SyntheticTrack> tracks;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  for (std::size_t k = 0; k < n_tracks; ++k) {
    Rng rng(master.fork());
    SyntheticTrack tr;
    tr.voice = finish(make_voice(rng, n, sample_rate), 0.45, sample_rate);
    tr.accompaniment = finish(make_accompaniment(rng, n, sample_rate), 0.45, sample_rate);
    tr.mixture.sample_rate = sample_rate;
    tr.mixture.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      tr.mixture.samples[i] = tr.voice.samples[i] + tr.accompaniment.samples[i];
    }
    tracks.push_back(std::move(tr));
  }
  return tracks;
}

#define MADSEP_INSTANTIATE_TRAINING(T)                                                     \
  template Var<T> gkl(const Tensor<T>&, const Var<T>&, double);                            \
  template double gkl(const Tensor<T>&, const Tensor<T>&, double);                         \
  template Loss<T> mad_loss(const Tensor<T>&, const Var<T>&, const Var<T>&, const Var<T>&, \
                            const Var<T>&, const LossConfig&);                             \
  template double global_norm(const TensorMap<T>&);                                        \
  template double clip_grad_norm(TensorMap<T>&, double);                                   \
  template class Adam<T>;                                                                  \
  template std::vector<EpochRecord> train(models::ModelParams<T>&,                         \
                                          const models::MaskerConfig&,                     \
                                          const std::vector<signal::SegmentPair>&,         \
                                          const TrainConfig&, const EpochCallback&);

MADSEP_INSTANTIATE_TRAINING(float)
MADSEP_INSTANTIATE_TRAINING(double)

}  // namespace madsep::training
