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
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace madsep::cli {

enum ExitCode : int { kOk = 0, kComputeFailure = 1, kUsageError = 2 };

/// Settings shared by every subcommand.
struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::optional<Precision> precision;
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

struct SynthArgs {
  std::filesystem::path out;
  std::size_t tracks = 2;
  double seconds = 8.0;
};

struct TrainArgs {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> data;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> history;
  std::vector<std::string> overrides;  // key=value
  bool quiet = false;
};

struct SeparateArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path input;
  std::filesystem::path output;
  /// When given, its F, T and L must agree with the checkpoint.
  std::optional<std::filesystem::path> config;
};

struct EvalArgs {
  std::filesystem::path estimate;
  std::filesystem::path reference;
  std::vector<std::filesystem::path> interferers;
  double window_s = 30.0;
  double hop_s = 15.0;
  std::size_t taps = 512;
  std::optional<std::filesystem::path> csv;
  bool table = false;
};

struct ParamsArgs {
  std::string variant = "rnn";
  std::size_t L_enc = 7;
  std::size_t C_o = 256;
  std::size_t N_tr = 744;
  std::size_t F = 2049;
};

struct GradcheckArgs {
  std::string scale = "tiny";
};

/// Valid values for the convolutional masker's grid.
const std::vector<std::size_t>& grid_L_enc();
const std::vector<std::size_t>& grid_C_o();

/// Reference counts for the recurrent masker at N_tr = 744, F = 2049.
inline constexpr std::size_t kExpectedRnnMasker = 22'996'113;
inline constexpr std::size_t kExpectedDenoiser = 4'199'425;

/// Resolves defaults < config file < overrides < global flags.
RunConfig resolve_train_config(const TrainArgs& args, const GlobalOptions& g);

int cmd_synth(const SynthArgs& args, const GlobalOptions& g, Streams io);
int cmd_train(const TrainArgs& args, const GlobalOptions& g, Streams io);
int cmd_separate(const SeparateArgs& args, const GlobalOptions& g, Streams io);
int cmd_eval(const EvalArgs& args, const GlobalOptions& g, Streams io);
int cmd_params(const ParamsArgs& args, const GlobalOptions& g, Streams io);
int cmd_gradcheck(const GradcheckArgs& args, const GlobalOptions& g, Streams io);

}  // namespace madsep::cli
