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

#ifndef AENS_ENSEMBLE_H_
#define AENS_ENSEMBLE_H_

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "aens/tensor.h"
#include "json.hpp"

namespace aens {

inline constexpr double kRowSumTolerance = 1e-5;

// N x K row-stochastic class probabilities from one model.
struct PredictionMatrix {
  std::string model_name;
  std::vector<std::string> sample_ids;
  TensorD probs;  // [N, K]

  std::size_t rows() const { return sample_ids.size(); }
  std::size_t classes() const { return probs.empty() ? 0 : probs.dim(1); }
  // Throws SpecError on any invariant violation.
  void validate() const;
};

enum class CombineRule { kAverage, kWeightedAverage };

CombineRule parse_rule(const std::string& text);
std::string rule_name(CombineRule rule);

struct EnsembleMember {
  std::reference_wrapper<const PredictionMatrix> matrix;
  double weight = 1.0;
};

struct EnsembleSpec {
  std::vector<EnsembleMember> members;
  CombineRule rule = CombineRule::kAverage;
};

// sum_i c_i P_i with c_i = w_i / sum_j w_j, accumulated in member-name order. kAverage
// ignores the given weights. Members must share sample ids in identical
// order; otherwise AlignmentError names the first divergent id.
PredictionMatrix combine(const EnsembleSpec& spec);

// Top k by accuracy, descending; ties by name ascending.
std::vector<std::pair<std::string, double>> select_best_k(
    std::vector<std::pair<std::string, double>> candidates, std::size_t k);

// Index of the row maximum; ties go to the lowest index.
std::size_t argmax_row(const TensorD& probs, std::size_t row);

double accuracy(const PredictionMatrix& matrix, const std::vector<std::size_t>& labels);

// Per-class recall; classes without samples report 0.
std::vector<double> per_class_accuracy(const PredictionMatrix& matrix, const std::vector<std::size_t>& labels);

// CSV with header sample_id,p_0,...,p_{K-1}, 12 significant digits.
std::string format_matrix(const PredictionMatrix& matrix);
PredictionMatrix parse_matrix(const std::string& text, const std::string& model_name);
void write_matrix(const PredictionMatrix& matrix, const std::string& path);
// model_name becomes the file stem.
PredictionMatrix read_matrix(const std::string& path);

// Sample-id -> label file: either a dataset manifest (labels follow its
// sorted class names) or a two-column sample_id,label CSV.
std::vector<std::size_t> read_labels_for(const std::string& path, const std::vector<std::string>& sample_ids);

struct EnsembleReport {
  std::vector<std::string> member_names;
  std::vector<double> weights;
  std::vector<double> member_accuracy;
  CombineRule rule = CombineRule::kAverage;
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
};

nlohmann::json to_json(const EnsembleReport& report);

}  // namespace aens

#endif  // AENS_ENSEMBLE_H_
