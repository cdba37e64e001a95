#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cmgn {

// Cosines are clamped to [-1 + kCosineClamp, 1 - kCosineClamp] so that
// sin(theta) = sqrt(1 - cos^2) stays away from zero.
inline constexpr double kCosineClamp = 1e-7;
inline constexpr double kCosineMin = -1.0 + kCosineClamp;
inline constexpr double kCosineMax = 1.0 - kCosineClamp;

double clamp_cosine(double c) noexcept;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
bool all_finite(std::span<const double> v);

// Unit-norm copy of v. Throws DegenerateInputError for a zero vector and
// NumericalError for non-finite entries.
std::vector<double> l2_normalize(std::span<const double> v);

// Normalizes every row in place; throws DegenerateInputError naming the row.
void l2_normalize_rows(Matrix& m);

// d x n matrix whose columns are unit-norm class centers. Bias terms are
// implicitly zero.
class ClassifierMatrix {
 public:
  ClassifierMatrix() = default;
  // Normalizes the columns of `weights` (d x n).
  explicit ClassifierMatrix(Matrix weights);

  std::size_t dim() const noexcept { return w_.rows(); }
  std::size_t num_classes() const noexcept { return w_.cols(); }
  const Matrix& weights() const noexcept { return w_; }
  double operator()(std::size_t r, std::size_t c) const { return w_(r, c); }

  // Mutable access for optimizer updates; call renormalize() afterwards.
  Matrix& mutable_weights() noexcept { return w_; }
  void renormalize();

  bool operator==(const ClassifierMatrix&) const = default;

 private:
  Matrix w_;
};

// (i, j) = clamp(<features_i, W_j>) for row-normalized features (B x d).
Matrix cosine_batch(const Matrix& features, const ClassifierMatrix& classifier);

// Max-shifted log-softmax. Throws NumericalError on non-finite input.
std::vector<double> stable_log_softmax(std::span<const double> logits);

}  // namespace cmgn
