#include "cmgn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cmgn/error.hpp"

namespace cmgn {

double clamp_cosine(double c) noexcept { return std::clamp(c, kCosineMin, kCosineMax); }

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                     std::to_string(rows_ * cols_));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::vector<double> l2_normalize(std::span<const double> v) {
  if (!all_finite(v)) throw NumericalError("l2_normalize: non-finite input");
  const double n = norm2(v);
  if (!(n > 0.0)) throw DegenerateInputError("l2_normalize: zero-norm vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

void l2_normalize_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double n = norm2(row);
    if (!std::isfinite(n)) throw NumericalError("row " + std::to_string(r) + " is not finite");
    if (!(n > 0.0)) throw DegenerateInputError("row " + std::to_string(r) + " has zero norm");
    for (double& x : row) x /= n;
  }
}

ClassifierMatrix::ClassifierMatrix(Matrix weights) : w_(std::move(weights)) { renormalize(); }

void ClassifierMatrix::renormalize() {
  for (std::size_t c = 0; c < w_.cols(); ++c) {
    double ss = 0.0;
    for (std::size_t r = 0; r < w_.rows(); ++r) ss += w_(r, c) * w_(r, c);
    const double n = std::sqrt(ss);
    if (!std::isfinite(n)) throw NumericalError("classifier column " + std::to_string(c) + " is not finite");
    if (!(n > 0.0)) throw DegenerateInputError("classifier column " + std::to_string(c) + " has zero norm");
    // Already unit up to rounding: leave the bits alone so the projection is idempotent.
    if (std::abs(n - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) continue;
    for (std::size_t r = 0; r < w_.rows(); ++r) w_(r, c) /= n;
  }
}

Matrix cosine_batch(const Matrix& features, const ClassifierMatrix& classifier) {
  if (features.cols() != classifier.dim()) {
    throw ShapeError("cosine_batch: feature dim " + std::to_string(features.cols()) +
                     " vs classifier dim " + std::to_string(classifier.dim()));
  }
  const Matrix& w = classifier.weights();
  Matrix out(features.rows(), classifier.num_classes());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    auto x = features.row(i);
    auto o = out.row(i);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double xk = x[k];
      auto wk = w.row(k);
      for (std::size_t j = 0; j < o.size(); ++j) o[j] += xk * wk[j];
    }
    for (double& c : o) c = clamp_cosine(c);
  }
  return out;
}

std::vector<double> stable_log_softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  if (!all_finite(logits)) throw NumericalError("stable_log_softmax: non-finite logit");
  const auto top = std::max_element(logits.begin(), logits.end());
  const double mx = *top;
  // Sum without the leading 1 so log1p keeps the tail of confident rows.
  double rest = 0.0;
  for (auto it = logits.begin(); it != logits.end(); ++it) {
    if (it != top) rest += std::exp(*it - mx);
  }
  const double log_norm = std::log1p(rest);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = (logits[i] - mx) - log_norm;
  return out;
}

}  // namespace cmgn
