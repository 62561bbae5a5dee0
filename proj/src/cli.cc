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

#include "aens/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "aens/data.h"
#include "aens/ensemble.h"
#include "aens/errors.h"
#include "aens/gradcheck_suite.h"
#include "json_util.h"

namespace aens {

namespace fs = std::filesystem;

void to_json(nlohmann::json& j, const RunConfig& config) {
  j = nlohmann::json{{"model", config.model},     {"train", config.train}, {"data", config.data_dir},
                     {"out_dir", config.out_dir}, {"seed", config.seed},   {"crop", config.crop}};
}

void from_json(const nlohmann::json& j, RunConfig& config) {
  json_util::require_keys(j, {"model", "train", "data", "out_dir", "seed", "crop"}, "run config");
  config.has_model = j.contains("model");
  config.has_num_classes = config.has_model && j.at("model").contains("num_classes");
  json_util::read_optional(j, "model", config.model, "run config");
  json_util::read_optional(j, "train", config.train, "run config");
  json_util::read_required(j, "data", config.data_dir, "run config");
  json_util::read_required(j, "out_dir", config.out_dir, "run config");
  json_util::read_optional(j, "seed", config.seed, "run config");
  json_util::read_optional(j, "crop", config.crop, "run config");
}

namespace {

std::string slurp(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string("cannot open ") + what + " " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << bytes;
  if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::json parse_json_file(const std::string& path, const char* what) {
  const std::string text = slurp(path, what);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string(what) + " " + path + " is not valid JSON: " + e.what());
  }
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

Dataset crop_all(Dataset ds) {
  for (auto& s : ds.samples) s = crop_bbox(s);
  return ds;
}


void train_and_write(const std::string& command, RunConfig config, Model model, const Dataset& data,
                     const nlohmann::json& extra, std::ostream& out) {
  const Dataset train_set = data.filter(Split::kTrain);
  const Dataset test_set = data.filter(Split::kTest);
  out << command << ": " << train_set.size() << " train / " << test_set.size() << " test samples, "
      << model.parameter_count() << " parameters\n";
  const auto progress = [&](const EpochRecord& r) {
    out << "epoch " << r.epoch << '/' << config.train.epochs << std::fixed << std::setprecision(4)
        << " loss " << r.train_loss << " train_acc " << r.train_accuracy << " test_acc " << r.test_accuracy
        << std::defaultfloat << '\n';
    out.flush();
  };
  const TrainResult result = train(std::move(model), train_set, test_set, config.train, progress);

  make_dir(config.out_dir);
  const fs::path dir(config.out_dir);
  save(result.model, (dir / kCheckpointFile).string(), result.history.summary());
  write_history_csv(result.history, (dir / kHistoryFile).string(), false);
  std::ostringstream timing;
  timing << "epoch,seconds\n";
  for (const auto& e : result.history.epochs) timing << e.epoch << ',' << e.seconds << '\n';
  timing << "total," << result.history.wall_seconds << '\n';
  spit(dir / kTimingFile, timing.str());

  config.model = result.model.config;
  nlohmann::json resolved = config;
  resolved["command"] = command;
  for (const auto& [k, v] : extra.items()) resolved[k] = v;
  spit(dir / kResolvedConfigFile, resolved.dump(2) + "\n");
  out << "wrote " << (dir / kCheckpointFile).string() << '\n';
}

Dataset load_run_data(const RunConfig& config) {
  Dataset data = load_dataset(config.data_dir);
  return config.crop ? crop_all(std::move(data)) : data;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir, std::ostream& out) {
  const SynthSpec spec = parse_json_file(spec_path, "synth spec").get<SynthSpec>();
  spec.validate();
  const Dataset ds = synth_dataset(spec);
  write_dataset(ds, out_dir);
  out << "synth: wrote " << ds.size() << " samples in " << ds.num_classes() << " classes to " << out_dir << '\n';
  return kExitOk;
}

int cmd_pretrain(const std::string& config_path, std::ostream& out) {
  RunConfig config = read_run_config(config_path);
  const Dataset data = load_run_data(config);
  if (!config.has_num_classes) config.model.num_classes = data.num_classes();
  config.model.validate();
  Model model = build_model<float>(config.model, config.seed);
  train_and_write("pretrain", config, std::move(model), data, nlohmann::json::object(), out);
  return kExitOk;
}

int cmd_finetune(const std::string& config_path, const std::string& from, const std::string& policy_text,
                 std::ostream& out) {
  RunConfig config = read_run_config(config_path);
  const TransferPolicy policy = parse_policy(policy_text);
  const Model source = load(from);
  const Dataset data = load_run_data(config);
  ModelConfig target = config.has_model ? config.model : source.config;
  if (!config.has_num_classes) target.num_classes = data.num_classes();
  config.model = target;
  Model model = transfer(source, target, policy, config.seed);
  train_and_write("finetune", config, std::move(model), data, {{"from", from}, {"policy", policy_text}}, out);
  return kExitOk;
}

Dataset load_split(const std::string& dir, const std::string& split, bool crop) {
  Dataset ds = load_dataset(dir, parse_split(split));
  return crop ? crop_all(std::move(ds)) : ds;
}

int cmd_predict(const std::string& model_path, const std::string& data_dir, const std::string& split,
                const std::string& out_path, bool crop, std::ostream& out) {
  const Model model = load(model_path);
  const Dataset ds = load_split(data_dir, split, crop);
  const EvalResult result = evaluate(model, ds, fs::path(out_path).stem().string());
  write_matrix(result.predictions, out_path);
  out << "predict: " << result.predictions.rows() << " rows, accuracy " << result.accuracy << ", wrote "
      << out_path << '\n';
  return kExitOk;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_dir, const std::string& split,
                 const std::string& out_path, bool crop, std::ostream& out) {
  const Model model = load(model_path);
  const Dataset ds = load_split(data_dir, split, crop);
  const EvalResult result = evaluate(model, ds, fs::path(model_path).stem().string());
  nlohmann::json report{{"model", model_path},
                        {"split", split},
                        {"samples", ds.size()},
                        {"accuracy", result.accuracy},
                        {"per_class_accuracy", per_class_accuracy(result.predictions, ds.labels())},
                        {"class_names", ds.class_names}};
  if (!out_path.empty()) spit(out_path, report.dump(2) + "\n");
  out << report.dump(2) << '\n';
  return kExitOk;
}

int cmd_ensemble(const std::vector<std::string>& member_paths, std::vector<double> weights,
                 const std::string& labels_path, const std::string& out_path, std::string rule_text,
                 const std::string& predictions_out, std::ostream& out) {
  if (member_paths.empty()) throw SpecError("ensemble: at least one member is required");
  if (weights.empty()) weights.assign(member_paths.size(), 1.0);
  if (weights.size() != member_paths.size()) {
    throw SpecError("ensemble: " + std::to_string(weights.size()) + " weights for " +
                    std::to_string(member_paths.size()) + " members");
  }
  if (rule_text.empty()) {
    const bool uniform = std::all_of(weights.begin(), weights.end(), [&](double w) { return w == weights[0]; });
    rule_text = uniform ? "average" : "weighted_average";
  }
  std::vector<PredictionMatrix> matrices;
  matrices.reserve(member_paths.size());
  for (const auto& p : member_paths) matrices.push_back(read_matrix(p));

  EnsembleSpec spec;
  spec.rule = parse_rule(rule_text);
  for (std::size_t i = 0; i < matrices.size(); ++i) spec.members.push_back({std::cref(matrices[i]), weights[i]});
  const PredictionMatrix combined = combine(spec);
  const std::vector<std::size_t> labels = read_labels_for(labels_path, combined.sample_ids);

  EnsembleReport report;
  report.rule = spec.rule;
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    report.member_names.push_back(matrices[i].model_name);
    report.weights.push_back(weights[i]);
    report.member_accuracy.push_back(accuracy(matrices[i], labels));
    out << "member " << matrices[i].model_name << " weight " << weights[i] << " accuracy "
        << report.member_accuracy.back() << '\n';
  }
  report.accuracy = accuracy(combined, labels);
  report.per_class_accuracy = per_class_accuracy(combined, labels);
  out << "ensemble " << combined.model_name << " accuracy " << report.accuracy << '\n';
  spit(out_path, to_json(report).dump(2) + "\n");
  if (!predictions_out.empty()) write_matrix(combined, predictions_out);
  return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, const std::string& corrupt, std::ostream& out) {
  GradCheckOptions options;
  options.seed = seed;
  options.corrupt_layer = corrupt;
  const auto rows = run_gradcheck_suite(options);
  bool all = true;
  out << std::left << std::setw(24) << "layer" << std::setw(16) << "max_rel_error" << "status\n";
  for (const auto& r : rows) {
    all = all && r.passed;
    std::ostringstream err;
    err << std::scientific << std::setprecision(3) << r.max_rel_error;
    out << std::setw(24) << r.layer << std::setw(16) << err.str() << (r.passed ? "PASS" : "FAIL") << '\n';
  }
  out << (all ? "all rows below " : "some rows at or above ") << kGradCheckTolerance << '\n';
  return all ? kExitOk : kExitRuntimeError;
}

}  // namespace

RunConfig read_run_config(const std::string& path) {
  const nlohmann::json j = parse_json_file(path, "run config");
  if (!j.is_object()) throw ConfigError("run config " + path + " must be a JSON object");
  RunConfig config = j.get<RunConfig>();
  config.train.validate();
  return config;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attention-backbone ensemble image classifier toolkit", "aens"};
  app.require_subcommand(1);

  std::string spec_path, out_dir;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset (labels.csv + PPM images)");
  synth->add_option("--spec", spec_path, "Synthetic dataset spec (JSON)")->required();
  synth->add_option("--out", out_dir, "Output directory")->required();

  std::string config_path, from, policy = "all";
  auto* pretrain = app.add_subcommand("pretrain", "Train a model from scratch on a source dataset");
  pretrain->add_option("--config", config_path, "Run config (JSON)")->required();
  auto* finetune = app.add_subcommand("finetune", "Transfer a checkpoint to a target dataset and train");
  finetune->add_option("--config", config_path, "Run config (JSON)")->required();
  finetune->add_option("--from", from, "Source checkpoint")->required();
  finetune->add_option("--policy", policy, "freeze | all")->check(CLI::IsMember({"freeze", "all"}));

  std::string model_path, data_dir, split = "test", matrix_out;
  bool crop = false;
  auto* predict = app.add_subcommand("predict", "Export a prediction matrix CSV");
  predict->add_option("--model", model_path, "Checkpoint")->required();
  predict->add_option("--data", data_dir, "Dataset directory")->required();
  predict->add_option("--split", split, "train | test");
  predict->add_option("--out", matrix_out, "Output CSV")->required();
  predict->add_flag("--crop", crop, "Crop samples to their bounding box");

  std::string report_out;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Report accuracy of a checkpoint on a dataset split");
  evaluate_cmd->add_option("--model", model_path, "Checkpoint")->required();
  evaluate_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  evaluate_cmd->add_option("--split", split, "train | test");
  evaluate_cmd->add_option("--out", report_out, "Optional JSON report path");
  evaluate_cmd->add_flag("--crop", crop, "Crop samples to their bounding box");

  std::vector<std::string> members;
  std::vector<double> weights;
  std::string labels_path, rule, combined_out;
  auto* ensemble = app.add_subcommand("ensemble", "Combine prediction matrices and score them");
  ensemble->add_option("--members", members, "Member prediction CSVs")->required();
  ensemble->add_option("--weights", weights, "Member weights, e.g. 2,1,1,1 (default all 1)")->delimiter(',');
  ensemble->add_option("--labels", labels_path, "labels.csv manifest or sample_id,label CSV")->required();
  ensemble->add_option("--out", report_out, "Report JSON")->required();
  ensemble->add_option("--rule", rule, "average | weighted_average");
  ensemble->add_option("--predictions", combined_out, "Optional combined prediction CSV");

  std::uint64_t seed = 0;
  std::string corrupt;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference audit of every layer backward");
  gradcheck->add_option("--seed", seed, "Input seed");
  gradcheck->add_option("--corrupt", corrupt, "Perturb the analytic gradient of one row (harness test)")
      ->group("");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUserError;
  }

  try {
    if (synth->parsed()) return cmd_synth(spec_path, out_dir, out);
    if (pretrain->parsed()) return cmd_pretrain(config_path, out);
    if (finetune->parsed()) return cmd_finetune(config_path, from, policy, out);
    if (predict->parsed()) return cmd_predict(model_path, data_dir, split, matrix_out, crop, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(model_path, data_dir, split, report_out, crop, out);
    if (ensemble->parsed()) return cmd_ensemble(members, weights, labels_path, report_out, rule, combined_out, out);
    if (gradcheck->parsed()) return cmd_gradcheck(seed, corrupt, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.user_error() ? kExitUserError : kExitRuntimeError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitUserError;
}

}  // namespace aens
