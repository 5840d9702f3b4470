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
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "madsep/models.hpp"
#include "madsep/signal.hpp"
#include "madsep/training.hpp"

namespace madsep::cli {

/// Bad configuration text, unknown key or unparsable value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Precision { kF32, kF64 };

Precision parse_precision(const std::string& s);
std::string to_string(Precision p);

/// Flat key=value run configuration. Every key has a default; a config file
/// may override any of them and command-line overrides win over the file.
/// Keys outside the known set are rejected.
class RunConfig {
 public:
  enum class Source { kDefault, kFile, kCommandLine };

  RunConfig();

  /// Known keys in canonical order.
  static const std::vector<std::string>& keys();
  static bool known(const std::string& key);

  /// Parses `key = value` lines. Blank lines and lines starting with '#' or
  /// ';' are ignored. A key repeated within one file is an error.
  void load_file(const std::filesystem::path& path);
  void load_text(const std::string& text, const std::string& origin = "<text>");

  /// Command-line override; always takes precedence over the file.
  void set_override(const std::string& key, const std::string& value);
  /// Accepts "key=value".
  void set_override(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  Source source(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  models::MaskerConfig masker() const;
  signal::StftConfig stft() const;
  training::TrainConfig train() const;
  Precision precision() const;

  /// Full resolved configuration as ordered key=value pairs.
  std::map<std::string, std::string> as_map() const;
  /// One `prefix key=value` line per key, in canonical order.
  std::string echo(const std::string& prefix = "") const;

 private:
  void assign(const std::string& key, const std::string& value, Source src);

  struct Entry {
    std::string value;
    Source source = Source::kDefault;
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace madsep::cli
