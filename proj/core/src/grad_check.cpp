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

#include "madsep/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "madsep/rng.hpp"

namespace madsep {
namespace {

double evaluate(const MultiScalarFn& f, const std::vector<Tensor<double>>& inputs) {
  Tape<double> tape;
  std::vector<Var<double>> vars;
  vars.reserve(inputs.size());
  for (const auto& x : inputs) vars.push_back(tape.constant(x));
  const Var<double> y = f(tape, vars);
  if (y.value().size() != 1) {
    throw ShapeError("grad_check: function must be scalar-valued, got shape " +
                     shape_str(y.shape()));
  }
  return y.value().item();
}

}  // namespace

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (pass ? "pass" : "FAIL") << " max_rel_err=" << max_rel_err
     << " coords=" << coords_checked << " worst=(input " << worst_input
     << ", index " << worst_index << ", analytic " << worst_analytic
     << ", numeric " << worst_numeric << ")";
  return os.str();
}

GradCheckReport grad_check(const MultiScalarFn& f,
                           const std::vector<Tensor<double>>& inputs,
                           const GradCheckOptions& options) {
  std::vector<Tensor<double>> analytic;
  {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (const auto& x : inputs) vars.push_back(tape.leaf(x, true));
    const Var<double> y = f(tape, vars);
    tape.backward(y);  // throws on non-scalar output
    for (const auto& v : vars) analytic.push_back(v.grad());
  }

  Rng rng(options.seed);
  GradCheckReport report;
  std::vector<Tensor<double>> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<std::size_t> coords(inputs[k].size());
    std::iota(coords.begin(), coords.end(), 0);
    if (coords.size() > options.coords_per_input) {
      std::shuffle(coords.begin(), coords.end(), rng.engine());
      coords.resize(options.coords_per_input);
    }
    for (std::size_t i : coords) {
      const double x0 = inputs[k][i];
      probe[k][i] = x0 + options.step;
      const double fp = evaluate(f, probe);
      probe[k][i] = x0 - options.step;
      const double fm = evaluate(f, probe);
      probe[k][i] = x0;
      const double numeric = (fp - fm) / (2.0 * options.step);
      const double a = analytic[k][i];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), options.scale_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_err || report.coords_checked == 1) {
        report.max_rel_err = std::max(report.max_rel_err, rel);
        report.worst_input = k;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.pass = report.max_rel_err < options.tolerance;
  return report;
}

GradCheckReport grad_check(const ScalarFn& f, const Tensor<double>& x,
                           const GradCheckOptions& options) {
  return grad_check(
      [&f](Tape<double>& t, const std::vector<Var<double>>& v) { return f(t, v[0]); },
      std::vector<Tensor<double>>{x}, options);
}

}  // namespace madsep
