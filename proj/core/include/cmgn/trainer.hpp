#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "cmgn/curriculum.hpp"
#include "cmgn/datasets.hpp"
#include "cmgn/margin_losses.hpp"
#include "cmgn/model.hpp"

namespace cmgn {

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<std::size_t> lr_decay_epochs;  // 0-based epoch indices, strictly increasing
  double lr_decay_factor = 0.1;
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
  LossVariant variant;
  StatisticKind statistic_kind = StatisticKind::MeanPositiveCosine;
  double curriculum_momentum = kDefaultCurriculumMomentum;
  MomentumPlacement momentum_placement = MomentumPlacement::History;
  ModelShape model;

  void validate() const;
};

// Step decay: learning_rate * factor^(number of decay epochs <= epoch).
double learning_rate_at(const TrainConfig& config, std::size_t epoch);

struct TraceRecord {
  std::uint64_t k = 0;     // optimizer step, from 1
  double loss = 0.0;
  double t = 0.0;          // moving-average t after this step's update
  double r = 0.0;          // batch statistic fed to the update
  double hard_fraction = 0.0;
  double m_min = 1.0;
  double m_max = 1.0;
  double learning_rate = 0.0;
  bool operator==(const TraceRecord&) const = default;
};

using TrainTrace = std::vector<TraceRecord>;

// Everything needed to continue training at an epoch boundary.
struct TrainingSnapshot {
  ModelParams params;
  ModelTensors velocity;
  CurriculumState curriculum;
  std::uint64_t epochs_completed = 0;
  bool operator==(const TrainingSnapshot&) const = default;
};

struct TrainResult {
  TrainingSnapshot snapshot;
  TrainTrace trace;
};

// Classical momentum: v <- momentum v + g + wd p (biases exempt from decay),
// p <- p - lr(epoch) v, then classifier columns are renormalized.
// Throws NumericalError mentioning `iteration` on a non-finite gradient.
void sgd_step(ModelParams& params, const ModelTensors& grads, ModelTensors& velocity,
              const TrainConfig& config, std::size_t epoch, std::uint64_t iteration = 0);

// Fresh parameters, zero velocity, t = 0.
TrainingSnapshot initial_snapshot(const TrainConfig& config, std::size_t input_dim, std::size_t num_classes);

// Runs epochs [resume.epochs_completed, config.epochs) over the train split.
// Each epoch shuffles with a generator seeded by (seed, epoch), so resuming
// from a snapshot reproduces the uninterrupted run.
TrainResult train(const TrainConfig& config, const LabeledDataset& dataset,
                  std::optional<TrainingSnapshot> resume = std::nullopt);

// Fraction of rows in `split` whose argmax cosine matches the label.
double accuracy(const ModelParams& params, const LabeledDataset& dataset, Split split);

// CSV with header k,loss,t,r,hard_fraction,M_min,M_max,lr; reals in shortest
// round-trip form.
void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path);
TrainTrace read_trace_csv(const std::filesystem::path& path);

}  // namespace cmgn
