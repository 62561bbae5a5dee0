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

#include <gtest/gtest.h>

#include "aens/gradcheck_suite.h"

namespace aens {
namespace {

TEST(GradCheckTest, Square) {
  const TensorD x({1}, {3.0});
  EXPECT_LT(grad_check([](const TensorD& v) { return v[0] * v[0]; }, TensorD({1}, {6.0}), x), 1e-8);
}

TEST(GradCheckTest, LinearIsExactToRounding) {
  const TensorD x({3}, {0.5, -2.0, 4.0});
  const auto f = [](const TensorD& v) { return 2.0 * v[0] - 3.0 * v[1] + 0.25 * v[2]; };
  EXPECT_LT(grad_check(f, TensorD({3}, {2.0, -3.0, 0.25}), x), 1e-9);
}

TEST(GradCheckTest, DetectsWrongGradient) {
  const TensorD x({1}, {3.0});
  EXPECT_GT(grad_check([](const TensorD& v) { return v[0] * v[0]; }, TensorD({1}, {6.5}), x), 1e-2);
}

TEST(GradCheckTest, RelativeErrorFloorsDenominatorAtOne) {
  EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0), 1e-9);
  EXPECT_DOUBLE_EQ(relative_error(10.0, 11.0), 1.0 / 11.0);
}

TEST(GradCheckSuiteTest, AllRowsPassForSeveralSeeds) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto rows = run_gradcheck_suite({seed, ""});
    ASSERT_EQ(rows.size(), gradcheck_row_names().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      EXPECT_EQ(rows[i].layer, gradcheck_row_names()[i]);
      EXPECT_TRUE(rows[i].passed) << rows[i].layer << " seed " << seed << " err " << rows[i].max_rel_error;
    }
  }
}

TEST(GradCheckSuiteTest, CorruptionHookIsDetected) {
  for (const auto& name : gradcheck_row_names()) {
    const auto rows = run_gradcheck_suite({0, name});
    for (const auto& r : rows) EXPECT_EQ(r.passed, r.layer != name) << name << " / " << r.layer;
  }
}

}  // namespace
}  // namespace aens
