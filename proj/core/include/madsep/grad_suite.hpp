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

#include <functional>
#include <string>
#include <vector>

#include "madsep/grad_check.hpp"

namespace madsep {

struct GradSuiteCase {
  std::string name;
  double tolerance = 0.0;
  GradCheckReport report;
};

struct GradSuiteResult {
  std::vector<GradSuiteCase> cases;
  bool pass() const;
};

/// Finite-difference checks, in float64, of every layer, the divergence,
/// the tiny configuration of both maskers end to end, and the full
/// training objective. Inputs are fixed, so the outcome is reproducible.
/// `on_case` is called as each case finishes.
GradSuiteResult run_grad_suite(const std::function<void(const GradSuiteCase&)>& on_case = {});

}  // namespace madsep
