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

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "madsep/bss_eval.hpp"
#include "madsep/checkpoint.hpp"
#include "madsep/grad_suite.hpp"
#include "madsep/models.hpp"
#include "madsep/signal.hpp"
#include "madsep/training.hpp"

namespace madsep::cli {
namespace fs = std::filesystem;
namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

int guarded(Streams io, const std::function<int()>& body) {
  try {
    return body();
  } catch (const training::TrainingError& e) {
    io.err << "error: " << e.what() << "\n";
    return kComputeFailure;
  } catch (const NumericError& e) {
    io.err << "error: " << e.what() << "\n";
    return kComputeFailure;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kUsageError;
  }
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t x : v) s += (s.empty() ? "" : ", ") + std::to_string(x);
  return s;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw UsageError("cannot write '" + path.string() + "'");
  os << std::setprecision(17);
  return os;
}

struct TrackFiles {
  std::string name;
  fs::path mixture;
  fs::path voice;
};

std::vector<TrackFiles> find_tracks(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("data directory '" + dir.string() + "' not found");
  std::vector<TrackFiles> tracks;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string fname = entry.path().filename().string();
    if (!fname.starts_with("mixture_") || entry.path().extension() != ".wav") continue;
    const std::string id = entry.path().stem().string().substr(8);
    const fs::path voice = dir / ("voice_" + id + ".wav");
    if (!fs::exists(voice)) {
      throw UsageError("'" + entry.path().string() + "' has no matching '" + voice.string() + "'");
    }
    tracks.push_back({id, entry.path(), voice});
  }
  if (tracks.empty()) {
    throw UsageError("no mixture_*.wav files in '" + dir.string() + "'");
  }
  std::sort(tracks.begin(), tracks.end(),
            [](const TrackFiles& a, const TrackFiles& b) { return a.name < b.name; });
  return tracks;
}

std::vector<signal::SegmentPair> load_segments(const std::vector<TrackFiles>& tracks,
                                               const signal::StftConfig& stft,
                                               const models::MaskerConfig& cfg) {
  std::vector<signal::SegmentPair> all;
  for (const auto& t : tracks) {
    const signal::AudioClip mix = signal::load_wav_mono(t.mixture);
    const signal::AudioClip voice = signal::load_wav_mono(t.voice);
    if (mix.size() != voice.size() || mix.sample_rate != voice.sample_rate) {
      throw UsageError("'" + t.mixture.string() + "' and '" + t.voice.string() +
                       "' differ in length or sample rate");
    }
    if (mix.size() < stft.window_len) {
      throw UsageError("'" + t.mixture.string() + "' is shorter than one analysis window");
    }
    auto segs = signal::segment(signal::stft(mix, stft).magnitude_tensor(),
                                signal::stft(voice, stft).magnitude_tensor(), cfg.T, cfg.L);
    for (auto& s : segs) all.push_back(std::move(s));
  }
  return all;
}

template <typename T>
int train_impl(const RunConfig& rc, const TrainArgs& args, Streams io) {
  const models::MaskerConfig cfg = rc.masker();
  const signal::StftConfig stft = rc.stft();
  const training::TrainConfig tc = rc.train();
  const std::string data = rc.get("data");
  const std::string out = rc.get("out");
  if (data.empty()) throw UsageError("train: no data directory (use --data or data=)");
  if (out.empty()) throw UsageError("train: no checkpoint path (use --out or out=)");
  const fs::path history = rc.get("history").empty() ? fs::path(out + ".history.csv")
                                                      : fs::path(rc.get("history"));

  const auto segments = load_segments(find_tracks(data), stft, cfg);
  Rng init(tc.seed);
  models::Checkpoint<T> ckpt{cfg, stft, rc.as_map(), models::ModelParams<T>::create(cfg, init)};
  if (!args.quiet) {
    io.out << "segments " << segments.size() << ", parameters " << ckpt.params.count() << "\n";
  }

  std::ofstream hist = open_output(history);
  hist << rc.echo("# ") << "epoch,loss,grad_norm,wall_ms\n";

  auto records = training::train(
      ckpt.params, cfg, segments, tc, [&](const training::EpochRecord& r) {
        hist << r.epoch << ',' << r.loss << ',' << r.grad_norm << ',' << r.wall_ms << '\n';
        if (!args.quiet) {
          io.out << "epoch " << r.epoch << " loss " << r.loss << " grad_norm " << r.grad_norm
                 << "\n";
        }
        return true;
      });
  hist.close();
  if (!hist) throw UsageError("failed writing '" + history.string() + "'");
  models::save_checkpoint(out, ckpt);

  if (records.empty()) {
    io.out << "final loss: n/a (0 epochs)\n";
  } else {
    io.out << "final loss: " << std::setprecision(10) << records.back().loss << "\n";
  }
  return kOk;
}

template <typename T>
void check_compatible(const models::Checkpoint<T>& ckpt, const signal::Spectrogram& spec,
                      const std::optional<fs::path>& config) {
  const auto& c = ckpt.config;
  if (spec.bins != c.F) {
    throw UsageError("checkpoint expects F=" + std::to_string(c.F) + " bands but the input has " +
                     std::to_string(spec.bins));
  }
  if (!config) return;
  RunConfig rc;
  rc.load_file(*config);
  const std::size_t F = rc.get_size("F"), Tn = rc.get_size("T"), L = rc.get_size("L");
  if (F != c.F || Tn != c.T || L != c.L) {
    std::ostringstream msg;
    msg << "config '" << config->string() << "' has F=" << F << " T=" << Tn << " L=" << L
        << " but the checkpoint has F=" << c.F << " T=" << c.T << " L=" << c.L
        << "; refusing to separate";
    throw UsageError(msg.str());
  }
}

template <typename T>
int separate_impl(const SeparateArgs& args, const GlobalOptions& g, Streams io) {
  auto ckpt = models::load_checkpoint<T>(args.checkpoint);
  const signal::AudioClip clip = signal::load_wav_mono(args.input);
  signal::Spectrogram spec = signal::stft(clip, ckpt.stft);
  check_compatible(ckpt, spec, args.config);

  const models::MaskerConfig& cfg = ckpt.config;
  const auto inputs = signal::segment_inputs(spec.magnitude_tensor(), cfg.T, cfg.L);
  std::vector<Tensor<double>> blocks(inputs.size());

  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      Tape<T> tape;
      nn::Binding<T> masker(tape, ckpt.params.masker, false);
      nn::Binding<T> denoiser(tape, ckpt.params.denoiser, false);
      Rng rng(0);
      const auto v = tape.constant(inputs[b].template cast<T>().reshaped({1, cfg.T + cfg.L, cfg.F}));
      auto out = models::mad_forward(v, cfg, masker, denoiser, models::Mode::kEval, rng);
      blocks[b] = out.denoised.value().template cast<double>().reshaped({cfg.T, cfg.F});
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(g.threads, inputs.size()));
  if (workers == 1) {
    run(0, inputs.size());
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (inputs.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          run(std::min(inputs.size(), w * chunk), std::min(inputs.size(), (w + 1) * chunk));
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

  spec.set_magnitude(signal::stitch(blocks, spec.frames));
  const signal::AudioClip voice = signal::istft(spec);
  signal::save_wav(args.output, voice);
  io.out << "# checkpoint " << args.checkpoint.string() << "\n";
  for (const auto& [k, v] : ckpt.run_config) io.out << "# " << k << "=" << v << "\n";
  io.out << "wrote " << args.output.string() << " (" << voice.size() << " samples, "
         << inputs.size() << " segments)\n";
  return kOk;
}

}  // namespace

const std::vector<std::size_t>& grid_L_enc() {
  static const std::vector<std::size_t> v{5, 7, 9, 11, 13, 15};
  return v;
}

const std::vector<std::size_t>& grid_C_o() {
  static const std::vector<std::size_t> v{64, 128, 256};
  return v;
}

RunConfig resolve_train_config(const TrainArgs& args, const GlobalOptions& g) {
  RunConfig rc;
  for (const auto& o : args.overrides) rc.set_override(o);
  if (args.data) rc.set_override("data", args.data->string());
  if (args.out) rc.set_override("out", args.out->string());
  if (args.history) rc.set_override("history", args.history->string());
  if (g.seed) rc.set_override("seed", std::to_string(*g.seed));
  if (g.precision) rc.set_override("precision", to_string(*g.precision));
  if (args.config) rc.load_file(*args.config);
  return rc;
}

int cmd_synth(const SynthArgs& args, const GlobalOptions& g, Streams io) {
  return guarded(io, [&] {
    if (args.tracks == 0) throw UsageError("synth: --tracks must be at least 1");
    const std::uint64_t seed = g.seed.value_or(0);
    const auto tracks = training::make_synthetic_dataset(seed, args.tracks, args.seconds);
    std::error_code ec;
    fs::create_directories(args.out, ec);
    if (ec || !fs::is_directory(args.out)) {
      throw UsageError("cannot create output directory '" + args.out.string() + "'");
    }
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      const std::string id = std::to_string(i);
      signal::save_wav(args.out / ("mixture_" + id + ".wav"), tracks[i].mixture);
      signal::save_wav(args.out / ("voice_" + id + ".wav"), tracks[i].voice);
      signal::save_wav(args.out / ("accomp_" + id + ".wav"), tracks[i].accompaniment);
    }
    std::ofstream cfg = open_output(args.out / "synth.cfg");
    cfg << "tracks=" << args.tracks << "\nseconds=" << args.seconds << "\nseed=" << seed
        << "\nsample_rate=44100\n";
    io.out << "wrote " << 3 * tracks.size() << " files to " << args.out.string() << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_train(const TrainArgs& args, const GlobalOptions& g, Streams io) {
  return guarded(io, [&] {
    const RunConfig rc = resolve_train_config(args, g);
    return rc.precision() == Precision::kF32 ? train_impl<float>(rc, args, io)
                                             : train_impl<double>(rc, args, io);
  });
}

int cmd_separate(const SeparateArgs& args, const GlobalOptions& g, Streams io) {
  return guarded(io, [&] {
    return g.precision.value_or(Precision::kF64) == Precision::kF32
               ? separate_impl<float>(args, g, io)
               : separate_impl<double>(args, g, io);
  });
}

int cmd_eval(const EvalArgs& args, const GlobalOptions& g, Streams io) {
  return guarded(io, [&] {
    const signal::AudioClip est = signal::load_wav_mono(args.estimate);
    const signal::AudioClip ref = signal::load_wav_mono(args.reference);
    std::vector<signal::AudioClip> interf;
    for (const auto& p : args.interferers) interf.push_back(signal::load_wav_mono(p));
    auto check = [&](const signal::AudioClip& c, const fs::path& p) {
      if (c.size() != ref.size() || c.sample_rate != ref.sample_rate) {
        throw UsageError("'" + p.string() + "' does not match the reference in length or rate");
      }
    };
    check(est, args.estimate);
    for (std::size_t i = 0; i < interf.size(); ++i) check(interf[i], args.interferers[i]);

    std::vector<std::span<const double>> spans;
    for (const auto& c : interf) spans.emplace_back(c.samples);
    bss::EvalOptions opt{args.window_s, args.hop_s, args.taps, std::max<std::size_t>(1, g.threads)};
    const auto report = bss::aggregate({bss::segmented_eval(
        est.samples, ref.samples, spans, ref.sample_rate, opt, args.estimate.stem().string())});

    auto emit = [&](std::ostream& os) {
      os << "# est=" << args.estimate.string() << "\n# ref=" << args.reference.string() << "\n";
      for (const auto& p : args.interferers) os << "# interf=" << p.string() << "\n";
      os << "# window_s=" << args.window_s << "\n# hop_s=" << args.hop_s
         << "\n# taps=" << args.taps << "\n";
      bss::write_csv(os, report);
    };
    if (args.csv) {
      std::ofstream os = open_output(*args.csv);
      emit(os);
    } else {
      emit(io.out);
    }
    if (args.table) bss::write_table(io.out, report);
    return static_cast<int>(kOk);
  });
}

int cmd_params(const ParamsArgs& args, const GlobalOptions& g, Streams io) {
  (void)g;
  return guarded(io, [&] {
    models::MaskerConfig cfg;
    cfg.variant = models::parse_variant(args.variant);
    cfg.N_tr = args.N_tr;
    cfg.F = args.F;
    cfg.L_enc = args.L_enc;
    cfg.C_o = args.C_o;
    const bool cnn = cfg.variant == models::Variant::kDwsCnn;
    if (cnn) {
      const auto& le = grid_L_enc();
      const auto& co = grid_C_o();
      if (std::find(le.begin(), le.end(), cfg.L_enc) == le.end()) {
        throw UsageError("invalid --L-enc " + std::to_string(cfg.L_enc) + "; valid choices: " +
                         join(le));
      }
      if (std::find(co.begin(), co.end(), cfg.C_o) == co.end()) {
        throw UsageError("invalid --C-o " + std::to_string(cfg.C_o) + "; valid choices: " +
                         join(co));
      }
    }
    cfg.validate();
    const auto counts = models::count_params(cfg);
    io.out << "variant  " << models::to_string(cfg.variant) << "\n";
    if (cnn) io.out << "L_enc    " << cfg.L_enc << "\nC_o      " << cfg.C_o << "\n";
    else io.out << "N_tr     " << cfg.N_tr << "\n";
    io.out << "F        " << cfg.F << "\nmasker   " << counts.masker << "\ndenoiser "
           << counts.denoiser << "\ntotal    " << counts.total << "\n";

    bool ok = true;
    if (!cnn && cfg.N_tr == 744 && cfg.F == 2049) {
      const bool match = counts.masker == kExpectedRnnMasker &&
                         counts.denoiser == kExpectedDenoiser;
      io.out << "expected counts: masker " << kExpectedRnnMasker << ", denoiser "
             << kExpectedDenoiser << ": " << (match ? "ok" : "MISMATCH") << "\n";
      ok = match;
    } else if (cnn && cfg.L_enc > grid_L_enc().front()) {
      models::MaskerConfig prev = cfg;
      prev.L_enc -= 2;
      const std::size_t delta = counts.masker - models::count_params(prev).masker;
      const std::size_t c = cfg.C_o;
      const std::size_t expected = 2 * (c * c + 31 * c);
      io.out << "delta vs L_enc=" << prev.L_enc << ": " << delta
             << " (2(C_o^2 + 31 C_o) = " << expected << "): "
             << (delta == expected ? "ok" : "MISMATCH") << "\n";
      ok = delta == expected;
    } else if (cnn) {
      io.out << "delta: smallest grid value, nothing to compare\n";
    }
    return static_cast<int>(ok ? kOk : kComputeFailure);
  });
}

int cmd_gradcheck(const GradcheckArgs& args, const GlobalOptions& g, Streams io) {
  (void)g;
  return guarded(io, [&] {
    if (args.scale != "tiny") throw UsageError("invalid --scale '" + args.scale + "'; valid: tiny");
    const auto result = run_grad_suite([&](const GradSuiteCase& c) {
      io.out << (c.report.pass ? "PASS " : "FAIL ") << std::left << std::setw(28) << c.name
             << " max_rel_err " << std::scientific << std::setprecision(3)
             << c.report.max_rel_err << " tol " << c.tolerance << std::defaultfloat << "\n";
    });
    const bool pass = result.pass();
    io.out << (pass ? "all " : "FAILED: ") << result.cases.size() << " cases"
           << (pass ? " passed" : "") << "\n";
    return static_cast<int>(pass ? kOk : kComputeFailure);
  });
}

}  // namespace madsep::cli
