#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace cmgn::oracle {

struct FiniteDiffSpec {
  double step_h = 1e-6;          // relative: h_i = step_h * max(1, |x_i|)
  double exclusion_band = 1e-4;  // branch gap below which touching coordinates are skipped
  double tolerance_rel = 1e-6;

  void validate() const;
};

// What the finite-difference driver needs from a piecewise-smooth function:
// its value, a branch signature, and the distance of each branch condition
// from its boundary.
struct PiecewiseSample {
  double value = 0.0;
  std::vector<std::uint8_t> branch;
  std::vector<double> gaps;
};

using PiecewiseFunction = std::function<PiecewiseSample(std::span<const double>)>;

struct FiniteDiffResult {
  std::vector<double> gradient;
  std::vector<std::uint8_t> checked;  // 0 where the coordinate was skipped
  std::size_t skipped_flip = 0;       // branch signature changed within +-h
  std::size_t skipped_band = 0;       // coordinate moves a gap that is inside the band
};

// Central differences per coordinate.
FiniteDiffResult finite_diff_grad(const PiecewiseFunction& fn, std::span<const double> point,
                                  const FiniteDiffSpec& spec = {});

// Convenience for smooth functions: every coordinate is checked.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& fn,
                                     std::span<const double> point, const FiniteDiffSpec& spec = {});

struct GradientComparison {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t compared = 0;
};

// Norm-wise relative error over checked coordinates:
//   max_i |a_i - f_i| / max_i max(|a_i|, |f_i|).
// Per-coordinate ratios are meaningless for entries that are rounding noise
// (probabilities of e^-100), so the scale is the largest gradient entry.
GradientComparison compare_gradients(std::span<const double> analytic, const FiniteDiffResult& fd);

}  // namespace cmgn::oracle
