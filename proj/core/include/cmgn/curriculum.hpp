#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "cmgn/margin_losses.hpp"

namespace cmgn {

// Batch statistic r fed into the moving average of t.
enum class StatisticKind : std::uint8_t {
  MeanPositiveCosine = 0,
  ModePositiveCosine = 1,
  MeanGtProbability = 2,
};

// Where the momentum weight goes in the moving average.
//   History:   t_k = (1 - momentum) r_k + momentum t_{k-1}
//   OnStatistic: t_k = momentum r_k + (1 - momentum) t_{k-1}
enum class MomentumPlacement : std::uint8_t { History = 0, OnStatistic = 1 };

std::string_view to_string(StatisticKind kind);
StatisticKind parse_statistic_kind(std::string_view name);
std::string_view to_string(MomentumPlacement placement);
MomentumPlacement parse_momentum_placement(std::string_view name);

inline constexpr double kDefaultCurriculumMomentum = 0.99;
inline constexpr double kModeBinWidth = 0.01;

struct CurriculumState {
  double t = 0.0;
  double momentum = kDefaultCurriculumMomentum;
  std::uint64_t iteration_k = 0;
  StatisticKind statistic_kind = StatisticKind::MeanPositiveCosine;
  MomentumPlacement placement = MomentumPlacement::History;

  void validate() const;
  bool operator==(const CurriculumState&) const = default;
};

// Mean or histogram mode of the positive cosines, or the mean ground-truth
// probability. The mode uses 0.01-wide bins over [-1, 1] and returns the
// midpoint of the fullest bin; ties go to the lower bin.
double batch_statistic(const CosineBatch& batch, std::span<const double> prob_gt, StatisticKind kind);

// One moving-average step; increments iteration_k.
CurriculumState update_t(const CurriculumState& state, double r);

}  // namespace cmgn
