#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cmgn/datasets.hpp"
#include "cmgn/trainer.hpp"

namespace cmgn::cli {

struct EvalConfig {
  std::size_t pairs_per_polarity = 1000;
  std::uint64_t pair_seed = 11;
  std::vector<double> far_targets{1e-3, 1e-2, 1e-1};
};

struct OutputPaths {
  std::string checkpoint = "model.ckpt";
  std::string trace = "trace.csv";
  std::string metrics = "metrics.json";
};

// One experiment: data, model, loss, curriculum, optimizer, evaluation, outputs.
struct ExperimentConfig {
  std::string name = "experiment";
  SyntheticSpec data;
  TrainConfig train;
  EvalConfig eval;
  OutputPaths output;

  void validate() const;
};

// Every key is optional; unknown keys are rejected. A top-level "extends"
// names another config file (relative to this one) that is loaded first and
// then overridden key by key (JSON merge patch).
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json load_config_document(const std::filesystem::path& path);

SyntheticSpec parse_synthetic_spec(const nlohmann::json& doc);
// Accepts either a bare synthetic-spec object or a full experiment config.
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& config);

// The built-in defaults: optimizer constants momentum 0.9, weight decay 5e-4,
// scale 64, margin 0.5 and curriculum momentum 0.99, sized for the toy data.
ExperimentConfig default_experiment_config();

}  // namespace cmgn::cli
