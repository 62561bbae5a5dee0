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

#ifndef AENS_GRADCHECK_SUITE_H_
#define AENS_GRADCHECK_SUITE_H_

#include <cstdint>
#include <string>
#include <vector>

namespace aens {

inline constexpr double kGradCheckTolerance = 1e-4;

struct GradCheckRow {
  std::string layer;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradCheckOptions {
  std::uint64_t seed = 0;
  // Test hook: perturbs the analytic gradient of the named row.
  std::string corrupt_layer;
};

// Finite-difference audit (double precision, h = 1e-5) of every layer kind,
// the channel attention block, softmax + cross-entropy and a small end-to-end
// model. Inputs keep a margin from ReLU kinks and pooling ties.
std::vector<GradCheckRow> run_gradcheck_suite(const GradCheckOptions& options = {});

std::vector<std::string> gradcheck_row_names();

}  // namespace aens

#endif  // AENS_GRADCHECK_SUITE_H_
