#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "cli/experiment_config.hpp"
#include "cmgn/evaluation.hpp"

namespace cmgn::cli {

// Process exit codes.
enum ExitCode : int { kOk = 0, kValidationError = 1, kNumericalFailure = 2, kIoError = 3 };

// Maps the library exception hierarchy onto exit codes and prints the message.
int report_exception(std::ostream& err);

struct ExperimentOutcome {
  TrainResult result;
  double train_accuracy = 0.0;
  double holdout_accuracy = 0.0;
  double rank1 = 0.0;
  VerificationReport verification;
  nlohmann::json metrics;
};

// Trains and evaluates one experiment on a loaded dataset. Throws
// ValidationError if the dataset does not match the config's data section.
ExperimentOutcome run_experiment(const ExperimentConfig& config, const LabeledDataset& dataset);

struct CompareRow {
  std::string name;
  std::string variant;
  std::string t_mode;  // "adaptive" or the fixed value
  std::string statistic;
  double verification_accuracy = 0.0;
  double best_threshold = 0.0;
  double train_accuracy = 0.0;
  double final_loss = 0.0;
  double final_t = 0.0;
  std::string status = "ok";
};

// One row per config, in the given order. Sub-runs may execute concurrently
// (bounded by `threads`); results do not depend on it.
std::vector<CompareRow> compare_experiments(const std::vector<ExperimentConfig>& configs,
                                            const LabeledDataset& dataset, unsigned threads);
void write_compare_csv(const std::vector<CompareRow>& rows, const std::filesystem::path& path);

// CMGN_THREADS, 0 or unset = serial.
unsigned threads_from_env();

int cmd_gen_data(const std::filesystem::path& spec, const std::filesystem::path& out, std::ostream& os,
                 std::ostream& err);
int cmd_train(const std::filesystem::path& config, const std::filesystem::path& data,
              const std::filesystem::path& out_dir, std::ostream& os, std::ostream& err);
int cmd_compare(const std::vector<std::filesystem::path>& configs, const std::filesystem::path& data,
                const std::filesystem::path& out, std::ostream& os, std::ostream& err);
int cmd_trace(const std::string& variant, const std::vector<double>& t_values, const std::filesystem::path& out,
              std::ostream& os, std::ostream& err);
int cmd_grad_check(const std::string& variant, std::size_t trials, std::uint64_t seed, std::ostream& os,
                   std::ostream& err);

inline constexpr double kGradCheckTolerance = 1e-6;

}  // namespace cmgn::cli
