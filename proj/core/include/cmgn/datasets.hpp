#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cmgn/numerics.hpp"

namespace cmgn {

struct SyntheticSpec {
  std::size_t num_classes = 10;
  std::size_t input_dim = 16;
  std::size_t samples_per_class = 200;
  double noise_sigma = 0.15;
  std::uint64_t seed = 1;
  double holdout_fraction = 0.2;

  void validate() const;
  // Holdout rows per class: round(fraction * samples_per_class), capped so
  // that at least one train row remains.
  std::size_t holdout_per_class() const;
};

enum class Split : std::uint8_t { Train = 0, Holdout = 1 };

struct LabeledDataset {
  Matrix inputs;  // N x input_dim
  std::vector<std::size_t> labels;
  std::vector<Split> splits;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t input_dim() const noexcept { return inputs.cols(); }
  // 1 + max label.
  std::size_t num_classes() const;
  std::vector<std::size_t> indices(Split split) const;
  // Rows `idx` gathered into a matrix.
  Matrix gather(const std::vector<std::size_t>& idx) const;

  // Labels in range, shapes consistent, every class has a train row.
  void validate(std::size_t num_classes) const;
  bool operator==(const LabeledDataset&) const = default;
};

struct VerificationPair {
  std::size_t a = 0;
  std::size_t b = 0;
  bool same = false;
  bool operator==(const VerificationPair&) const = default;
};

using VerificationPairs = std::vector<VerificationPair>;

// Class centers uniform on the unit sphere; each sample is
// normalize(center + noise_sigma * gaussian). Rows are class-major; the last
// holdout_per_class() rows of each class are tagged Holdout.
LabeledDataset generate(const SyntheticSpec& spec);

// Balanced same/different pairs over holdout rows, sampled without
// replacement while candidates last, with replacement after that.
VerificationPairs make_pairs(const LabeledDataset& dataset, std::size_t pairs_per_polarity,
                             std::uint64_t seed);

// Header: x0,...,x{d-1},label,split with split in {train, holdout}. Reals
// are written in shortest round-trip form.
void save_csv(const LabeledDataset& dataset, const std::filesystem::path& path);
LabeledDataset load_csv(const std::filesystem::path& path);

}  // namespace cmgn
