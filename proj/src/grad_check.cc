// Copyright 2026 The aens Authors. All Rights Reserved.
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

#include "aens/grad_check.h"

#include <algorithm>
#include <cmath>

namespace aens {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

TensorD numeric_gradient(const ScalarFunction& f, const TensorD& point, double h) {
  TensorD probe = point;
  TensorD grad(point.shape(), 0.0);
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + h;
    const double up = f(probe);
    probe[i] = original - h;
    const double down = f(probe);
    probe[i] = original;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double grad_check(const ScalarFunction& f, const TensorD& analytic, const TensorD& point,
                  double h) {
  require_same_shape(analytic.shape(), point.shape(), "grad_check");
  const TensorD numeric = numeric_gradient(f, point, h);
  double worst = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i)
    worst = std::max(worst, relative_error(analytic[i], numeric[i]));
  return worst;
}

double grad_check(const ScalarFunction& f, const GradientFunction& gradient, const TensorD& point,
                  double h) {
  return grad_check(f, gradient(point), point, h);
}

}  // namespace aens
