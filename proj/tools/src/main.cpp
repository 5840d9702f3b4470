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

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace madsep::cli;
  CLI::App app{"madsep: masker-denoiser singing voice separation"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  std::uint64_t seed = 0;
  std::string precision;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", global.threads, "Worker threads for separate and eval")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  auto* prec_opt = app.add_option("--precision", precision, "Arithmetic precision")
                       ->check(CLI::IsMember({"f32", "f64"}));

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write synthetic mixture/voice/accompaniment WAVs");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--tracks", synth.tracks, "Number of tracks")->capture_default_str();
  s->add_option("--seconds", synth.seconds, "Track duration (at least 2)")->capture_default_str();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model on a directory of WAV pairs");
  t->add_option("--config", train.config, "Flat key=value config file")->check(CLI::ExistingFile);
  t->add_option("--data", train.data, "Directory with mixture_*.wav and voice_*.wav");
  t->add_option("--out", train.out, "Checkpoint to write");
  t->add_option("--history", train.history, "History CSV (default: <out>.history.csv)");
  t->add_option("--set", train.overrides, "Override a config key, key=value (repeatable)");
  t->add_flag("--quiet", train.quiet, "Only print the final loss");

  SeparateArgs sep;
  auto* p = app.add_subcommand("separate", "Estimate the voice of a mixture");
  p->add_option("--ckpt", sep.checkpoint, "Checkpoint")->required();
  p->add_option("--in", sep.input, "Mixture WAV")->required();
  p->add_option("--out", sep.output, "Voice estimate WAV")->required();
  p->add_option("--config", sep.config, "Run config that must agree with the checkpoint");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "SDR/SIR/SAR of an estimate");
  e->add_option("--est", ev.estimate, "Estimated source")->required();
  e->add_option("--ref", ev.reference, "Reference source")->required();
  e->add_option("--interf", ev.interferers, "Interfering sources (repeatable)");
  e->add_option("--window", ev.window_s, "Window length in seconds")->capture_default_str();
  e->add_option("--hop", ev.hop_s, "Hop in seconds")->capture_default_str();
  e->add_option("--taps", ev.taps, "Distortion filter length")->capture_default_str();
  e->add_option("--csv", ev.csv, "Write CSV here instead of stdout");
  e->add_flag("--table", ev.table, "Also print a table");

  ParamsArgs pa;
  auto* a = app.add_subcommand("params", "Print trainable parameter counts");
  a->add_option("--variant", pa.variant, "rnn or dws-cnn")->capture_default_str();
  a->add_option("--L-enc", pa.L_enc, "Encoder depth of dws-cnn")->capture_default_str();
  a->add_option("--C-o", pa.C_o, "Channels of dws-cnn")->capture_default_str();
  a->add_option("--N-tr", pa.N_tr, "Bands kept by the rnn encoder")->capture_default_str();
  a->add_option("--F", pa.F, "Frequency bands")->capture_default_str();

  GradcheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  g->add_option("--scale", gc.scale, "Problem size")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsageError;
  }
  if (seed_opt->count() > 0) global.seed = seed;
  if (prec_opt->count() > 0) global.precision = parse_precision(precision);

  Streams io{std::cout, std::cerr};
  if (s->parsed()) return cmd_synth(synth, global, io);
  if (t->parsed()) return cmd_train(train, global, io);
  if (p->parsed()) return cmd_separate(sep, global, io);
  if (e->parsed()) return cmd_eval(ev, global, io);
  if (a->parsed()) return cmd_params(pa, global, io);
  if (g->parsed()) return cmd_gradcheck(gc, global, io);
  return kUsageError;
}
