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

#include "madsep/bss_eval.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "fftw_util.hpp"

namespace madsep::bss {
namespace {

using detail::fftw_alloc;
using detail::planner_mutex;
using detail::Plan;
using Complex = std::complex<double>;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Forward/inverse real FFTs of one fixed length.
class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n), bins_(n / 2 + 1), time_(fftw_alloc<double>(n)), freq_(fftw_alloc<fftw_complex>(bins_)) {
    std::lock_guard lock(planner_mutex());
    fwd_.emplace(fftw_plan_dft_r2c_1d(static_cast<int>(n), time_.get(), freq_.get(), FFTW_ESTIMATE));
    inv_.emplace(fftw_plan_dft_c2r_1d(static_cast<int>(n), freq_.get(), time_.get(), FFTW_ESTIMATE));
  }

  std::vector<Complex> forward(std::span<const double> x) {
    std::fill(time_.get(), time_.get() + n_, 0.0);
    std::copy(x.begin(), x.end(), time_.get());
    fwd_->execute();
    std::vector<Complex> out(bins_);
    for (std::size_t k = 0; k < bins_; ++k) out[k] = {freq_[k][0], freq_[k][1]};
    return out;
  }

  // Inverse transform including the 1/n normalisation.
  std::vector<double> inverse(const std::vector<Complex>& spec) {
    for (std::size_t k = 0; k < bins_; ++k) {
      freq_[k][0] = spec[k].real();
      freq_[k][1] = spec[k].imag();
    }
    inv_->execute();
    std::vector<double> out(time_.get(), time_.get() + n_);
    for (double& v : out) v /= static_cast<double>(n_);
    return out;
  }

  std::size_t bins() const { return bins_; }

 private:
  std::size_t n_, bins_;
  detail::FftwBuffer<double> time_;
  detail::FftwBuffer<fftw_complex> freq_;
  std::optional<Plan> fwd_, inv_;
};

// r(k) = sum_t a(t) b(t + k) for k in (-n, n), read from a circular
// correlation long enough to avoid wrap-around.
double corr_at(const std::vector<double>& circ, std::ptrdiff_t k) {
  const auto n = static_cast<std::ptrdiff_t>(circ.size());
  return circ[static_cast<std::size_t>(((k % n) + n) % n)];
}

std::vector<double> circular_corr(RealFft& fft, const std::vector<Complex>& a,
                                  const std::vector<Complex>& b) {
  std::vector<Complex> p(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) p[k] = std::conj(a[k]) * b[k];
  return fft.inverse(p);
}

// Solves G c = d, adding a ridge when Cholesky fails or is inaccurate.
Eigen::VectorXd solve_gram(const Eigen::MatrixXd& G, const Eigen::VectorXd& d, bool& ridge) {
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() == Eigen::Success) {
    Eigen::VectorXd c = llt.solve(d);
    const double scale = std::max(d.norm(), 1e-300);
    if (c.allFinite() && (G * c - d).norm() <= 1e-8 * scale) return c;
  }
  ridge = true;
  const double eps = 1e-10 * std::max(G.trace() / static_cast<double>(G.rows()), 1e-300);
  Eigen::MatrixXd R = G;
  R.diagonal().array() += eps;
  return Eigen::LLT<Eigen::MatrixXd>(R).solve(d);
}

double energy(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double db_ratio(double num, double den) {
  if (den <= kPerfectEnergyRatio * num) return kPerfect;
  return 10.0 * std::log10(num / den);
}

std::string fmt_db(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

}  // namespace

Decomposition decompose(std::span<const double> estimate, std::span<const double> target,
                        const std::vector<std::span<const double>>& interferers,
                        std::size_t taps) {
  const std::size_t n = estimate.size();
  if (taps == 0) throw EvalError("decompose: taps must be positive");
  if (target.size() != n) throw EvalError("decompose: estimate and target lengths differ");
  for (const auto& s : interferers) {
    if (s.size() != n) throw EvalError("decompose: interferer length differs from estimate");
  }
  if (std::all_of(target.begin(), target.end(), [](double v) { return v == 0.0; })) {
    throw EvalError("decompose: target is all zeros");
  }

  const std::size_t out_len = n + taps - 1;
  const std::size_t nfft = next_pow2(n + taps);
  RealFft fft(nfft);

  std::vector<std::span<const double>> sources{target};
  sources.insert(sources.end(), interferers.begin(), interferers.end());
  const std::size_t ns = sources.size();
  std::vector<std::vector<Complex>> spec;
  for (const auto& s : sources) spec.push_back(fft.forward(s));
  const std::vector<Complex> est_spec = fft.forward(estimate);

  // Gram matrix over (source, delay) pairs and correlations with the estimate.
  const auto L = static_cast<std::ptrdiff_t>(taps);
  Eigen::MatrixXd G(ns * taps, ns * taps);
  Eigen::VectorXd D(ns * taps);
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = i; j < ns; ++j) {
      const std::vector<double> r = circular_corr(fft, spec[i], spec[j]);
      for (std::ptrdiff_t a = 0; a < L; ++a) {
        for (std::ptrdiff_t b = 0; b < L; ++b) {
          const double v = corr_at(r, a - b);
          G(static_cast<Eigen::Index>(i * taps) + a, static_cast<Eigen::Index>(j * taps) + b) = v;
          G(static_cast<Eigen::Index>(j * taps) + b, static_cast<Eigen::Index>(i * taps) + a) = v;
        }
      }
    }
    const std::vector<double> c = circular_corr(fft, spec[i], est_spec);
    for (std::ptrdiff_t a = 0; a < L; ++a) D(static_cast<Eigen::Index>(i * taps) + a) = corr_at(c, a);
  }

  Decomposition out;
  auto project = [&](std::size_t nsrc) {
    const auto m = static_cast<Eigen::Index>(nsrc * taps);
    const Eigen::VectorXd coef =
        solve_gram(G.topLeftCorner(m, m), D.head(m), out.ridge);
    std::vector<Complex> acc(fft.bins(), Complex{});
    for (std::size_t i = 0; i < nsrc; ++i) {
      std::vector<double> filt(taps);
      for (std::size_t a = 0; a < taps; ++a) filt[a] = coef(static_cast<Eigen::Index>(i * taps + a));
      const std::vector<Complex> fs = fft.forward(filt);
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += fs[k] * spec[i][k];
    }
    std::vector<double> y = fft.inverse(acc);
    y.resize(out_len);
    return y;
  };

  out.s_target = project(1);
  const std::vector<double> p_all = ns > 1 ? project(ns) : out.s_target;
  out.e_interf.resize(out_len);
  out.e_artif.resize(out_len);
  for (std::size_t t = 0; t < out_len; ++t) {
    const double e = t < n ? estimate[t] : 0.0;
    out.e_interf[t] = p_all[t] - out.s_target[t];
    out.e_artif[t] = e - p_all[t];
  }
  return out;
}

Ratios ratios(const Decomposition& d) {
  const double st = energy(d.s_target);
  std::vector<double> s_plus_i(d.s_target.size()), noise(d.s_target.size());
  for (std::size_t t = 0; t < d.s_target.size(); ++t) {
    s_plus_i[t] = d.s_target[t] + d.e_interf[t];
    noise[t] = d.e_interf[t] + d.e_artif[t];
  }
  Ratios r;
  r.sdr = db_ratio(st, energy(noise));
  r.sir = db_ratio(st, energy(d.e_interf));
  r.sar = db_ratio(energy(s_plus_i), energy(d.e_artif));
  return r;
}

std::size_t window_count(std::size_t samples, double sample_rate, const EvalOptions& opt) {
  if (!(opt.hop_s > 0.0) || !(opt.window_s > opt.hop_s)) {
    throw EvalError("segmented evaluation needs window > hop > 0");
  }
  const auto win = static_cast<std::size_t>(std::llround(opt.window_s * sample_rate));
  const auto hop = static_cast<std::size_t>(std::llround(opt.hop_s * sample_rate));
  if (samples <= win) return 1;
  return 1 + (samples - win) / hop;
}

TrackReport segmented_eval(std::span<const double> estimate, std::span<const double> target,
                           const std::vector<std::span<const double>>& interferers,
                           double sample_rate, const EvalOptions& opt, std::string track) {
  if (!(sample_rate > 0.0)) throw EvalError("segmented_eval: sample rate must be positive");
  const std::size_t n = estimate.size();
  if (target.size() != n) throw EvalError("segmented_eval: estimate and target lengths differ");
  const std::size_t count = window_count(n, sample_rate, opt);
  const auto win = std::min(n, static_cast<std::size_t>(std::llround(opt.window_s * sample_rate)));
  const auto hop = static_cast<std::size_t>(std::llround(opt.hop_s * sample_rate));

  struct Slot {
    bool silent = false;
    SegmentResult result;
  };
  std::vector<Slot> slots(count);
  auto work = [&](std::size_t k) {
    const std::size_t start = k * hop;
    auto cut = [&](std::span<const double> s) { return s.subspan(start, win); };
    const auto tgt = cut(target);
    if (std::all_of(tgt.begin(), tgt.end(), [](double v) { return v == 0.0; })) {
      slots[k].silent = true;
      return;
    }
    std::vector<std::span<const double>> intf;
    for (const auto& s : interferers) intf.push_back(cut(s));
    const Decomposition d = decompose(cut(estimate), tgt, intf, opt.taps);
    slots[k].result = {k, static_cast<double>(start) / sample_rate, ratios(d), d.ridge};
  };

  const std::size_t threads = std::clamp<std::size_t>(opt.threads, 1, count);
  if (threads == 1) {
    for (std::size_t k = 0; k < count; ++k) work(k);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < count; k += threads) work(k);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  TrackReport rep;
  rep.track = std::move(track);
  std::vector<double> sdr, sir, sar;
  for (const Slot& s : slots) {
    if (s.silent) {
      ++rep.silent_skipped;
      continue;
    }
    rep.segments.push_back(s.result);
    sdr.push_back(s.result.ratios.sdr);
    sir.push_back(s.result.ratios.sir);
    sar.push_back(s.result.ratios.sar);
  }
  if (rep.segments.empty()) throw EvalError("segmented_eval: every segment has a silent target");
  rep.median = {median(sdr), median(sir), median(sar)};
  return rep;
}

double median(std::vector<double> values) {
  if (values.empty()) throw EvalError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  if (values.size() % 2 == 1) return values[m];
  const double a = values[m - 1], b = values[m];
  if (std::isinf(a) || std::isinf(b)) return a == b ? a : (std::isinf(b) ? b : a);
  return 0.5 * (a + b);
}

EvalReport aggregate(std::vector<TrackReport> tracks) {
  if (tracks.empty()) throw EvalError("aggregate: no tracks");
  EvalReport rep;
  std::vector<double> sdr, sir, sar;
  for (const auto& t : tracks) {
    sdr.push_back(t.median.sdr);
    sir.push_back(t.median.sir);
    sar.push_back(t.median.sar);
  }
  rep.tracks = std::move(tracks);
  rep.median = {median(sdr), median(sir), median(sar)};
  return rep;
}

void write_csv(std::ostream& os, const EvalReport& report) {
  os << "track,segment,start_s,sdr,sir,sar\n";
  for (const auto& t : report.tracks) {
    for (const auto& s : t.segments) {
      os << t.track << ',' << s.index << ',' << fmt_db(s.start_s) << ',' << fmt_db(s.ratios.sdr)
         << ',' << fmt_db(s.ratios.sir) << ',' << fmt_db(s.ratios.sar) << '\n';
    }
    os << t.track << ",median,," << fmt_db(t.median.sdr) << ',' << fmt_db(t.median.sir) << ','
       << fmt_db(t.median.sar) << '\n';
  }
}

void write_table(std::ostream& os, const EvalReport& report) {
  auto row = [&os](const std::string& a, const std::string& b, const Ratios& r, bool ridge) {
    os << std::left << std::setw(20) << a << std::setw(9) << b << std::right << std::setw(10)
       << fmt_db(r.sdr) << std::setw(10) << fmt_db(r.sir) << std::setw(10) << fmt_db(r.sar)
       << (ridge ? "  (ridge)" : "") << '\n';
  };
  os << std::left << std::setw(20) << "track" << std::setw(9) << "segment" << std::right
     << std::setw(10) << "SDR" << std::setw(10) << "SIR" << std::setw(10) << "SAR" << '\n';
  for (const auto& t : report.tracks) {
    for (const auto& s : t.segments) row(t.track, std::to_string(s.index), s.ratios, s.ridge);
    row(t.track, "median", t.median, false);
    if (t.silent_skipped > 0) {
      os << "  " << t.silent_skipped << " segment(s) with a silent target skipped\n";
    }
  }
  if (report.tracks.size() > 1) row("all tracks", "median", report.median, false);
}

}  // namespace madsep::bss
