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

#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <utility>

namespace madsep::cli {
namespace {

const std::vector<std::pair<std::string, std::string>>& defaults() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"variant", "rnn"},     {"F", "2049"},          {"N_tr", "744"},
      {"T", "60"},            {"L", "10"},            {"L_enc", "7"},
      {"C_o", "256"},         {"p_enc", "0.25"},      {"p_dec", "0.25"},
      {"window_len", "2049"}, {"hop", "384"},         {"fft_len", "4096"},
      {"lr", "0.0001"},       {"epochs", "100"},      {"batch", "4"},
      {"clip_norm", "0.5"},   {"lambda1", "0.01"},    {"lambda2", "0.0001"},
      {"seed", "0"},          {"precision", "f64"},   {"data", ""},
      {"out", ""},            {"history", ""},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename N>
N parse_number(const std::string& key, const std::string& text) {
  N value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
  }
  return value;
}

}  // namespace

Precision parse_precision(const std::string& s) {
  if (s == "f32") return Precision::kF32;
  if (s == "f64") return Precision::kF64;
  throw ConfigError("precision must be f32 or f64, got '" + s + "'");
}

std::string to_string(Precision p) { return p == Precision::kF32 ? "f32" : "f64"; }

RunConfig::RunConfig() {
  for (const auto& [key, value] : defaults()) entries_[key] = Entry{value, Source::kDefault};
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& kv : defaults()) out.push_back(kv.first);
    return out;
  }();
  return names;
}

bool RunConfig::known(const std::string& key) {
  const auto& k = keys();
  return std::find(k.begin(), k.end(), key) != k.end();
}

void RunConfig::assign(const std::string& key, const std::string& value, Source src) {
  if (!known(key)) {
    std::string list;
    for (const auto& k : keys()) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("unknown config key '" + key + "' (known keys: " + list + ")");
  }
  Entry& e = entries_.at(key);
  if (src == Source::kFile && e.source == Source::kCommandLine) return;
  e = Entry{value, src};
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  load_text(text.str(), path.string());
}

void RunConfig::load_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#' || body.front() == ';') continue;
    const auto eq = body.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (auto it = seen.find(key); it != seen.end()) {
      throw ConfigError(where + ": key '" + key + "' already set on line " +
                        std::to_string(it->second));
    }
    seen.emplace(key, lineno);
    try {
      assign(key, trim(body.substr(eq + 1)), Source::kFile);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

void RunConfig::set_override(const std::string& key, const std::string& value) {
  assign(key, value, Source::kCommandLine);
}

void RunConfig::set_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  set_override(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second.value;
}

RunConfig::Source RunConfig::source(const std::string& key) const {
  get(key);
  return entries_.at(key).source;
}

std::size_t RunConfig::get_size(const std::string& key) const {
  return parse_number<std::size_t>(key, get(key));
}

double RunConfig::get_double(const std::string& key) const {
  return parse_number<double>(key, get(key));
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  return parse_number<std::uint64_t>(key, get(key));
}

signal::StftConfig RunConfig::stft() const {
  signal::StftConfig s{get_size("window_len"), get_size("hop"), get_size("fft_len")};
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("stft settings: ") + e.what());
  }
  return s;
}

models::MaskerConfig RunConfig::masker() const {
  models::MaskerConfig c;
  try {
    c.variant = models::parse_variant(get("variant"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config key 'variant': ") + e.what());
  }
  c.F = get_size("F");
  const std::size_t bins = stft().bins();
  if (c.F != bins) {
    throw ConfigError("config key 'F' = " + std::to_string(c.F) + " does not match fft_len/2+1 = " +
                      std::to_string(bins));
  }
  c.N_tr = get_size("N_tr");
  c.T = get_size("T");
  c.L = get_size("L");
  c.L_enc = get_size("L_enc");
  c.C_o = get_size("C_o");
  c.p_enc = get_double("p_enc");
  c.p_dec = get_double("p_dec");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model settings: ") + e.what());
  }
  return c;
}

training::TrainConfig RunConfig::train() const {
  training::TrainConfig t;
  t.epochs = get_size("epochs");
  t.batch = get_size("batch");
  t.seed = get_u64("seed");
  t.clip_norm = get_double("clip_norm");
  t.adam.lr = get_double("lr");
  t.loss.lambda1 = get_double("lambda1");
  t.loss.lambda2 = get_double("lambda2");
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("training settings: ") + e.what());
  }
  return t;
}

Precision RunConfig::precision() const { return parse_precision(get("precision")); }

std::map<std::string, std::string> RunConfig::as_map() const {
  std::map<std::string, std::string> out;
  for (const auto& [key, e] : entries_) out.emplace(key, e.value);
  return out;
}

std::string RunConfig::echo(const std::string& prefix) const {
  std::string out;
  for (const auto& key : keys()) out += prefix + key + "=" + entries_.at(key).value + "\n";
  return out;
}

}  // namespace madsep::cli
