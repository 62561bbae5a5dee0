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

#ifndef AENS_PARALLEL_H_
#define AENS_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace aens {

// Worker count: ATTN_ENS_THREADS when set and positive, otherwise the
// hardware concurrency.
std::size_t worker_count();

// Runs body(i) for i in [0, n). Each index must write only its own output
// slot; callers reduce the slots in index order so results do not depend on
// the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace aens

#endif  // AENS_PARALLEL_H_
