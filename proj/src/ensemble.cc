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

#include "aens/ensemble.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "aens/data.h"

namespace aens {

void PredictionMatrix::validate() const {
  if (probs.rank() != 2 || probs.dim(0) != sample_ids.size()) {
    throw SpecError("prediction matrix " + model_name + " has " + std::to_string(sample_ids.size()) +
                    " ids but probabilities of shape " + shape_string(probs.shape()));
  }
  std::set<std::string> seen;
  for (const auto& id : sample_ids) {
    if (!seen.insert(id).second) throw SpecError("prediction matrix " + model_name + " repeats sample id " + id);
  }
  const std::size_t k = probs.dim(1);
  for (std::size_t r = 0; r < rows(); ++r) {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double p = probs[r * k + j];
      if (!(p >= 0.0 && p <= 1.0)) throw SpecError("prediction matrix " + model_name + " row " + sample_ids[r] + " has an entry outside [0, 1]");
      total += p;
    }
    if (std::abs(total - 1.0) > kRowSumTolerance) {
      throw SpecError("prediction matrix " + model_name + " row " + sample_ids[r] + " sums to " + std::to_string(total));
    }
  }
}

CombineRule parse_rule(const std::string& text) {
  if (text == "average") return CombineRule::kAverage;
  if (text == "weighted_average") return CombineRule::kWeightedAverage;
  throw ConfigError("unknown combine rule \"" + text + "\" (expected average or weighted_average)");
}

std::string rule_name(CombineRule rule) {
  return rule == CombineRule::kAverage ? "average" : "weighted_average";
}

PredictionMatrix combine(const EnsembleSpec& spec) {
  if (spec.members.empty()) throw SpecError("ensemble needs at least one member");
  std::vector<std::size_t> order(spec.members.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> weights;
  for (const auto& m : spec.members) {
    const double w = spec.rule == CombineRule::kAverage ? 1.0 : m.weight;
    if (!(w >= 0.0) || !std::isfinite(w)) throw SpecError("ensemble weights must be finite and nonnegative");
    weights.push_back(w);
  }
  if (std::none_of(weights.begin(), weights.end(), [](double w) { return w > 0.0; })) {
    throw SpecError("ensemble needs at least one positive weight");
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& na = spec.members[a].matrix.get().model_name;
    const auto& nb = spec.members[b].matrix.get().model_name;
    return na != nb ? na < nb : weights[a] < weights[b];
  });

  const PredictionMatrix& first = spec.members[order[0]].matrix.get();
  const std::size_t n = first.rows(), k = first.classes();
  for (std::size_t i : order) {
    const PredictionMatrix& m = spec.members[i].matrix.get();
    if (m.classes() != k) {
      throw AlignmentError("ensemble member " + m.model_name + " has " + std::to_string(m.classes()) +
                           " classes, expected " + std::to_string(k));
    }
    const std::size_t common = std::min(n, m.rows());
    for (std::size_t r = 0; r < common; ++r) {
      if (m.sample_ids[r] != first.sample_ids[r]) {
        throw AlignmentError("ensemble member " + m.model_name + " diverges at row " + std::to_string(r) +
                             ": sample id " + m.sample_ids[r] + " vs " + first.sample_ids[r]);
      }
    }
    if (m.rows() != n) {
      const std::string& id = m.rows() > n ? m.sample_ids[n] : first.sample_ids[m.rows()];
      throw AlignmentError("ensemble member " + m.model_name + " has " + std::to_string(m.rows()) + " rows, expected " +
                           std::to_string(n) + "; first unmatched sample id " + id);
    }
  }

  if (n == 0) throw SpecError("ensemble members have no rows");

  double total_weight = 0.0;
  for (std::size_t i : order) total_weight += weights[i];
  PredictionMatrix out;
  out.sample_ids = first.sample_ids;
  out.probs = TensorD({n, k}, 0.0);
  std::ostringstream name;
  name << rule_name(spec.rule) << '(';
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t i = order[pos];
    const PredictionMatrix& m = spec.members[i].matrix.get();
    const double coeff = weights[i] / total_weight;
    for (std::size_t e = 0; e < n * k; ++e) out.probs[e] += coeff * m.probs[e];
    name << (pos ? "," : "") << m.model_name << ':' << weights[i];
  }
  name << ')';
  out.model_name = name.str();
  return out;
}

std::vector<std::pair<std::string, double>> select_best_k(std::vector<std::pair<std::string, double>> candidates,
                                                          std::size_t k) {
  if (k > candidates.size()) {
    throw SpecError("cannot select " + std::to_string(k) + " of " + std::to_string(candidates.size()) + " candidates");
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  candidates.resize(k);
  return candidates;
}

std::size_t argmax_row(const TensorD& probs, std::size_t row) {
  const std::size_t k = probs.dim(1);
  std::size_t best = 0;
  for (std::size_t j = 1; j < k; ++j)
    if (probs[row * k + j] > probs[row * k + best]) best = j;
  return best;
}

double accuracy(const PredictionMatrix& matrix, const std::vector<std::size_t>& labels) {
  if (labels.size() != matrix.rows()) {
    throw AlignmentError("accuracy: " + std::to_string(labels.size()) + " labels for " + std::to_string(matrix.rows()) +
                         " prediction rows");
  }
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) correct += argmax_row(matrix.probs, r) == labels[r];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::vector<double> per_class_accuracy(const PredictionMatrix& matrix, const std::vector<std::size_t>& labels) {
  if (labels.size() != matrix.rows()) throw AlignmentError("per_class_accuracy: label count does not match rows");
  const std::size_t k = matrix.classes();
  std::vector<double> hits(k, 0.0), totals(k, 0.0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] >= k) throw AlignmentError("label " + std::to_string(labels[r]) + " exceeds class count");
    totals[labels[r]] += 1.0;
    hits[labels[r]] += argmax_row(matrix.probs, r) == labels[r];
  }
  for (std::size_t j = 0; j < k; ++j) hits[j] = totals[j] > 0.0 ? hits[j] / totals[j] : 0.0;
  return hits;
}

std::string format_matrix(const PredictionMatrix& matrix) {
  std::string out = "sample_id";
  const std::size_t k = matrix.classes();
  for (std::size_t j = 0; j < k; ++j) out += ",p_" + std::to_string(j);
  out += '\n';
  char buf[32];
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    out += matrix.sample_ids[r];
    for (std::size_t j = 0; j < k; ++j) {
      std::snprintf(buf, sizeof buf, ",%.12g", matrix.probs[r * k + j]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

PredictionMatrix parse_matrix(const std::string& text, const std::string& model_name) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) -> void {
    throw ParseError(model_name + ": line " + std::to_string(line_no) + ": " + why);
  };
  auto fields_of = [](const std::string& l) {
    std::vector<std::string> f;
    std::stringstream ss(l);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (!l.empty() && l.back() == ',') f.emplace_back();
    return f;
  };
  auto strip_cr = [](std::string& l) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
  };
  if (!std::getline(in, line)) {
    line_no = 1;
    fail("missing header");
  }
  ++line_no;
  strip_cr(line);
  const auto header = fields_of(line);
  if (header.size() < 2 || header[0] != "sample_id") fail("header must be sample_id,p_0,...");
  for (std::size_t j = 1; j < header.size(); ++j)
    if (header[j] != "p_" + std::to_string(j - 1)) fail("header column " + std::to_string(j) + " must be p_" + std::to_string(j - 1));
  const std::size_t k = header.size() - 1;

  PredictionMatrix m;
  m.model_name = model_name;
  std::vector<double> values;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = fields_of(line);
    if (f.size() != k + 1) fail("expected " + std::to_string(k + 1) + " fields, got " + std::to_string(f.size()));
    if (f[0].empty()) fail("empty sample_id");
    if (!seen.insert(f[0]).second) fail("duplicate sample_id " + f[0]);
    double total = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(f[j], &used);
      } catch (const std::exception&) {
        fail("malformed probability \"" + f[j] + "\"");
      }
      if (used != f[j].size()) fail("malformed probability \"" + f[j] + "\"");
      if (!(v >= 0.0 && v <= 1.0)) fail("probability " + f[j] + " outside [0, 1]");
      total += v;
      values.push_back(v);
    }
    if (std::abs(total - 1.0) > kRowSumTolerance) fail("row sums to " + std::to_string(total) + ", expected 1");
    m.sample_ids.push_back(f[0]);
  }
  if (!m.sample_ids.empty()) m.probs = TensorD({m.sample_ids.size(), k}, std::move(values));
  return m;
}

void write_matrix(const PredictionMatrix& matrix, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << format_matrix(matrix);
  if (!out) throw IoError("failed writing " + path);
}

PredictionMatrix read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open prediction matrix " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_matrix(text, std::filesystem::path(path).stem().string());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::vector<std::size_t> read_labels_for(const std::string& path, const std::vector<std::string>& sample_ids) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels file " + path);
  std::string header;
  std::getline(in, header);
  std::map<std::string, std::size_t> lookup;
  if (header.rfind("id,class_name", 0) == 0) {
    const auto rows = read_manifest(path);
    const auto names = class_names_of(rows);
    for (const auto& r : rows) {
      lookup[r.id] = static_cast<std::size_t>(std::lower_bound(names.begin(), names.end(), r.class_name) - names.begin());
    }
  } else {
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto comma = line.find(',');
      try {
        if (comma == std::string::npos) throw std::invalid_argument("missing comma");
        std::size_t used = 0;
        const std::string value = line.substr(comma + 1);
        const unsigned long label = std::stoul(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        lookup[line.substr(0, comma)] = label;
      } catch (const std::exception&) {
        throw ParseError(path + ": line " + std::to_string(line_no) + ": expected sample_id,label");
      }
    }
  }
  std::vector<std::size_t> labels;
  for (const auto& id : sample_ids) {
    const auto it = lookup.find(id);
    if (it == lookup.end()) throw AlignmentError("labels file " + path + " has no entry for sample id " + id);
    labels.push_back(it->second);
  }
  return labels;
}

nlohmann::json to_json(const EnsembleReport& report) {
  nlohmann::json members = nlohmann::json::array();
  for (std::size_t i = 0; i < report.member_names.size(); ++i) {
    members.push_back({{"name", report.member_names[i]},
                       {"weight", report.weights[i]},
                       {"accuracy", report.member_accuracy[i]}});
  }
  return {{"members", members},
          {"weights", report.weights},
          {"rule", rule_name(report.rule)},
          {"accuracy", report.accuracy},
          {"per_class_accuracy", report.per_class_accuracy}};
}

}  // namespace aens
