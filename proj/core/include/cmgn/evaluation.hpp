#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <vector>

#include "cmgn/datasets.hpp"
#include "cmgn/margin_losses.hpp"
#include "cmgn/numerics.hpp"

namespace cmgn {

struct TarAtFar {
  double far_target = 0.0;
  double tar = 0.0;
  double far = 0.0;        // achieved FAR, never above far_target
  double threshold = 0.0;  // accept when score >= threshold
};

struct RocPoint {
  double far = 0.0;
  double tar = 0.0;
  double threshold = 0.0;
};

struct VerificationReport {
  double best_accuracy = 0.0;
  double best_threshold = 0.0;
  std::vector<TarAtFar> tar_at_far;
  std::vector<RocPoint> roc_points;  // FAR and TAR non-decreasing
};

// Pairs are accepted when cosine(score) >= threshold. Candidate thresholds are
// every distinct score plus +inf; this covers every achievable split.
// For each FAR target the smallest threshold with FAR <= target is used.
VerificationReport verification_report(const Matrix& embeddings, const VerificationPairs& pairs,
                                       const std::vector<double>& far_targets);

// Same sweep over precomputed scores; `same[i]` marks positive pairs.
VerificationReport verification_report_from_scores(const std::vector<double>& scores,
                                                   const std::vector<bool>& same,
                                                   const std::vector<double>& far_targets);

// Fraction of probes whose most similar gallery row (lowest index on ties)
// carries the probe's label.
double rank1_identification(const Matrix& probe, const Matrix& gallery,
                            const std::vector<std::size_t>& probe_labels,
                            const std::vector<std::size_t>& gallery_labels);

struct CurveRow {
  double t = 0.0;
  double cos_j = 0.0;
  double modulation = 0.0;  // I
  double negative = 0.0;    // N
};

// Hard-branch I and N for every (t, cos_j) combination, t-major.
std::vector<CurveRow> modulation_curves(const LossVariant& variant, const std::vector<double>& t_values,
                                        const std::vector<double>& cos_grid);

// Header t,cos_j,I,N.
void write_curves_csv(const std::vector<CurveRow>& rows, const std::filesystem::path& path);

}  // namespace cmgn
