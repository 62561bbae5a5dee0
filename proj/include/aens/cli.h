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

#ifndef AENS_CLI_H_
#define AENS_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "aens/model.h"
#include "aens/trainer.h"
#include "json.hpp"

namespace aens {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 2;
inline constexpr int kExitRuntimeError = 3;

// Config file for pretrain / finetune.
struct RunConfig {
  ModelConfig model;
  bool has_model = false;        // "model" present in the document
  bool has_num_classes = false;  // "model.num_classes" present; otherwise taken from the data
  TrainConfig train;
  std::string data_dir;  // dataset root holding labels.csv; train and test splits are read from it
  std::string out_dir;
  std::uint64_t seed = 0;  // parameter initialization
  bool crop = false;       // crop every sample to its bbox before use
};

void to_json(nlohmann::json& j, const RunConfig& config);
void from_json(const nlohmann::json& j, RunConfig& config);
RunConfig read_run_config(const std::string& path);

// Output files written into RunConfig::out_dir.
inline constexpr const char* kCheckpointFile = "model.aens";
inline constexpr const char* kHistoryFile = "history.csv";
inline constexpr const char* kTimingFile = "timing.csv";
inline constexpr const char* kResolvedConfigFile = "resolved_config.json";

// Parses and runs one command; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aens

#endif  // AENS_CLI_H_
