#include "cmgn/curriculum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "cmgn/error.hpp"

namespace cmgn {

std::string_view to_string(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::MeanPositiveCosine: return "mean-cos";
    case StatisticKind::ModePositiveCosine: return "mode-cos";
    case StatisticKind::MeanGtProbability: return "mean-prob";
  }
  return "unknown";
}

StatisticKind parse_statistic_kind(std::string_view name) {
  if (name == "mean-cos" || name == "mean") return StatisticKind::MeanPositiveCosine;
  if (name == "mode-cos" || name == "mode") return StatisticKind::ModePositiveCosine;
  if (name == "mean-prob") return StatisticKind::MeanGtProbability;
  throw ValidationError("unknown statistic kind '" + std::string(name) + "'");
}

std::string_view to_string(MomentumPlacement placement) {
  return placement == MomentumPlacement::History ? "history" : "statistic";
}

MomentumPlacement parse_momentum_placement(std::string_view name) {
  if (name == "history") return MomentumPlacement::History;
  if (name == "statistic") return MomentumPlacement::OnStatistic;
  throw ValidationError("unknown momentum placement '" + std::string(name) + "'");
}

void CurriculumState::validate() const {
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw ValidationError("curriculum momentum must lie in [0, 1]");
  if (!std::isfinite(t)) throw ValidationError("curriculum t must be finite");
  if (iteration_k == 0 && t != 0.0) throw ValidationError("curriculum t must be 0 before the first update");
}

double batch_statistic(const CosineBatch& batch, std::span<const double> prob_gt, StatisticKind kind) {
  const std::size_t b = batch.size();
  if (b == 0) throw ValidationError("batch_statistic: empty batch");
  switch (kind) {
    case StatisticKind::MeanPositiveCosine: {
      double sum = 0.0;
      for (std::size_t i = 0; i < b; ++i) sum += batch.positive(i);
      return sum / static_cast<double>(b);
    }
    case StatisticKind::ModePositiveCosine: {
      constexpr std::size_t kBins = 200;
      std::array<std::size_t, kBins> counts{};
      for (std::size_t i = 0; i < b; ++i) {
        const double c = std::clamp(batch.positive(i), -1.0, 1.0);
        const auto bin = static_cast<std::size_t>(std::floor((c + 1.0) / kModeBinWidth));
        ++counts[std::min(bin, kBins - 1)];
      }
      // max_element returns the first maximum, i.e. the lower bin on ties.
      const auto best = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      return (static_cast<double>(best) + 0.5) * kModeBinWidth - 1.0;
    }
    case StatisticKind::MeanGtProbability: {
      if (prob_gt.size() != b) throw ShapeError("batch_statistic: prob_gt length mismatch");
      double sum = 0.0;
      for (double p : prob_gt) sum += p;
      return sum / static_cast<double>(b);
    }
  }
  throw ValidationError("batch_statistic: unknown kind");
}

CurriculumState update_t(const CurriculumState& state, double r) {
  if (!std::isfinite(r)) throw NumericalError("curriculum statistic is not finite");
  CurriculumState next = state;
  const double a = state.momentum;
  if (state.placement == MomentumPlacement::History) {
    next.t = (1.0 - a) * r + a * state.t;
  } else {
    next.t = a * r + (1.0 - a) * state.t;
  }
  ++next.iteration_k;
  return next;
}

}  // namespace cmgn
