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
#include <functional>
#include <string>
#include <vector>

#include "madsep/tape.hpp"
#include "madsep/tensor.hpp"

namespace madsep {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-6;
  /// Coordinates sampled per input tensor; tensors this small or smaller are
  /// checked exhaustively.
  std::size_t coords_per_input = 64;
  /// Denominator floor of the relative error; below it the comparison is
  /// absolute.
  double scale_floor = 1e-6;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
  bool pass = false;
  // Location of the worst coordinate.
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  std::string summary() const;
};

/// Scalar function of several tensors, built on the given tape.
using MultiScalarFn =
    std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;
using ScalarFn = std::function<Var<double>(Tape<double>&, const Var<double>&)>;

/// Compares reverse-mode gradients against central differences
/// (f(x + h e_i) - f(x - h e_i)) / 2h on a random subset of coordinates.
GradCheckReport grad_check(const MultiScalarFn& f,
                           const std::vector<Tensor<double>>& inputs,
                           const GradCheckOptions& options = {});

GradCheckReport grad_check(const ScalarFn& f, const Tensor<double>& x,
                           const GradCheckOptions& options = {});

}  // namespace madsep
