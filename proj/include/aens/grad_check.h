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

#ifndef AENS_GRAD_CHECK_H_
#define AENS_GRAD_CHECK_H_

#include <functional>

#include "aens/tensor.h"

namespace aens {

using ScalarFunction = std::function<double(const TensorD&)>;
using GradientFunction = std::function<TensorD(const TensorD&)>;

inline constexpr double kDefaultFiniteDifferenceStep = 1e-5;

// |analytic - numeric| / max(1, |analytic|, |numeric|)
double relative_error(double analytic, double numeric);

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
TensorD numeric_gradient(const ScalarFunction& f, const TensorD& point,
                         double h = kDefaultFiniteDifferenceStep);

// Max relative error between `analytic` and the central-difference gradient
// of f at `point`.
double grad_check(const ScalarFunction& f, const TensorD& analytic, const TensorD& point,
                  double h = kDefaultFiniteDifferenceStep);

double grad_check(const ScalarFunction& f, const GradientFunction& gradient, const TensorD& point,
                  double h = kDefaultFiniteDifferenceStep);

}  // namespace aens

#endif  // AENS_GRAD_CHECK_H_
