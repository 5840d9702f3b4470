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

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "madsep/models.hpp"
#include "madsep/signal.hpp"

namespace madsep::models {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything needed to rebuild a model and reproduce its preprocessing.
/// `run_config` echoes the key=value configuration of the run that wrote it.
template <typename T>
struct Checkpoint {
  MaskerConfig config;
  signal::StftConfig stft;
  std::map<std::string, std::string> run_config;
  ModelParams<T> params;
};

/// Container layout: 8-byte magic "MADCKPT\0", little-endian u64 header
/// length, JSON header, then raw little-endian tensor data.
template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Checkpoint<T>& ckpt);

/// Reads a checkpoint written with either precision and converts to T.
template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace madsep::models
