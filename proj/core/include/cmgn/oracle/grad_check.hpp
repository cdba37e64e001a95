#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cmgn/margin_losses.hpp"
#include "cmgn/oracle/finite_diff.hpp"

namespace cmgn::oracle {

struct GradCheckOptions {
  LossKind kind = LossKind::CurricularFace;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  std::vector<double> scales{1.0, 64.0};
  std::size_t batch = 8;
  std::size_t classes = 10;
  std::size_t dim = 16;
  FiniteDiffSpec fd;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checks = 0;        // (trial, scale) combinations
  std::size_t compared = 0;      // coordinates compared in total
  std::size_t skipped_flip = 0;
  std::size_t skipped_band = 0;
  // Worst offender.
  std::size_t worst_trial = 0;
  double worst_scale = 0.0;
  std::size_t worst_coordinate = 0;  // index into [features (B x d), classifier (d x n)]
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  bool passed(double tolerance) const { return max_rel_error <= tolerance; }
};

// Random batches whose ground-truth cosines span easy and hard regimes,
// compared between cmgn::backward and central differences of direct_evaluate.
GradCheckReport run_grad_check(const GradCheckOptions& options);

}  // namespace cmgn::oracle
