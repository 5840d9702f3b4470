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
#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace madsep::bss {

class EvalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Length of the allowed time-invariant distortion filter.
inline constexpr std::size_t kFilterTaps = 512;

/// Reported for a ratio whose denominator vanishes.
inline constexpr double kPerfect = std::numeric_limits<double>::infinity();

/// A denominator at or below this fraction of its numerator counts as zero,
/// i.e. anything beyond 200 dB reports the sentinel.
inline constexpr double kPerfectEnergyRatio = 1e-20;

/// Orthogonal split of an estimate. All components have length
/// N + taps - 1, the estimate being zero-padded at the end.
struct Decomposition {
  std::vector<double> s_target;
  std::vector<double> e_interf;
  std::vector<double> e_artif;
  /// True when a Gram matrix was singular and a ridge was added.
  bool ridge = false;
};

/// Projects `estimate` onto the span of delayed copies of `target`
/// (s_target) and of all sources (s_target + e_interf); e_artif is the
/// remainder. Throws EvalError on unequal lengths or an all-zero target.
Decomposition decompose(std::span<const double> estimate, std::span<const double> target,
                        const std::vector<std::span<const double>>& interferers,
                        std::size_t taps = kFilterTaps);

struct Ratios {
  double sdr = 0.0;
  double sir = 0.0;
  double sar = 0.0;
};

/// SDR = |s|^2 / |e_i + e_a|^2, SIR = |s|^2 / |e_i|^2,
/// SAR = |s + e_i|^2 / |e_a|^2, all in dB.
Ratios ratios(const Decomposition& d);

struct EvalOptions {
  double window_s = 30.0;
  double hop_s = 15.0;
  std::size_t taps = kFilterTaps;
  std::size_t threads = 1;
};

struct SegmentResult {
  std::size_t index = 0;
  double start_s = 0.0;
  Ratios ratios;
  bool ridge = false;
};

struct TrackReport {
  std::string track;
  std::vector<SegmentResult> segments;
  std::size_t silent_skipped = 0;
  Ratios median;
};

struct EvalReport {
  std::vector<TrackReport> tracks;
  /// Median over tracks of the per-track medians.
  Ratios median;
};

/// Number of analysis windows for a signal of `samples` samples. A signal
/// shorter than one window is evaluated as a single segment.
std::size_t window_count(std::size_t samples, double sample_rate, const EvalOptions& opt);

/// Windowed evaluation. Segments whose target is silent are skipped and
/// counted. Throws EvalError when window/hop are invalid or no segment
/// remains.
TrackReport segmented_eval(std::span<const double> estimate, std::span<const double> target,
                           const std::vector<std::span<const double>>& interferers,
                           double sample_rate, const EvalOptions& opt = {},
                           std::string track = "track");

/// Median with the usual even-count average; +inf entries sort last.
double median(std::vector<double> values);

EvalReport aggregate(std::vector<TrackReport> tracks);

/// Columns: track,segment,start_s,sdr,sir,sar. Sentinels print as "inf".
void write_csv(std::ostream& os, const EvalReport& report);
void write_table(std::ostream& os, const EvalReport& report);

}  // namespace madsep::bss
