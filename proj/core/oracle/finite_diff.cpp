#include "cmgn/oracle/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "cmgn/error.hpp"

namespace cmgn::oracle {

void FiniteDiffSpec::validate() const {
  if (!(step_h > 0.0) || !(exclusion_band > 0.0) || !(tolerance_rel > 0.0)) {
    throw ValidationError("finite-difference parameters must be positive");
  }
}

FiniteDiffResult finite_diff_grad(const PiecewiseFunction& fn, std::span<const double> point,
                                  const FiniteDiffSpec& spec) {
  spec.validate();
  std::vector<double> x(point.begin(), point.end());
  const PiecewiseSample base = fn(x);

  FiniteDiffResult res;
  res.gradient.assign(x.size(), 0.0);
  res.checked.assign(x.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double h = spec.step_h * std::max(1.0, std::abs(xi));
    x[i] = xi + h;
    const PiecewiseSample plus = fn(x);
    x[i] = xi - h;
    const PiecewiseSample minus = fn(x);
    x[i] = xi;

    if (plus.branch != base.branch || minus.branch != base.branch) {
      ++res.skipped_flip;
      continue;
    }
    bool in_band = false;
    for (std::size_t p = 0; p < base.gaps.size() && !in_band; ++p) {
      if (std::abs(base.gaps[p]) < spec.exclusion_band &&
          (plus.gaps[p] != base.gaps[p] || minus.gaps[p] != base.gaps[p])) {
        in_band = true;
      }
    }
    if (in_band) {
      ++res.skipped_band;
      continue;
    }
    // (xi + h) - (xi - h) is the step actually taken after rounding.
    const double span = (xi + h) - (xi - h);
    res.gradient[i] = (plus.value - minus.value) / span;
    res.checked[i] = 1;
  }
  return res;
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& fn,
                                     std::span<const double> point, const FiniteDiffSpec& spec) {
  const PiecewiseFunction wrapped = [&fn](std::span<const double> x) { return PiecewiseSample{fn(x), {}, {}}; };
  return finite_diff_grad(wrapped, point, spec).gradient;
}

GradientComparison compare_gradients(std::span<const double> analytic, const FiniteDiffResult& fd) {
  if (analytic.size() != fd.gradient.size()) throw ShapeError("compare_gradients: length mismatch");
  GradientComparison cmp;
  double scale = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    if (!fd.checked[i]) continue;
    ++cmp.compared;
    scale = std::max({scale, std::abs(analytic[i]), std::abs(fd.gradient[i])});
    const double err = std::abs(analytic[i] - fd.gradient[i]);
    if (err > worst) {
      worst = err;
      cmp.worst_index = i;
    }
  }
  cmp.max_rel_error = scale > 0.0 ? worst / scale : 0.0;
  return cmp;
}

}  // namespace cmgn::oracle
