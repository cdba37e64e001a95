#include "cmgn/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_set>

#include "cmgn/error.hpp"

namespace cmgn {

VerificationReport verification_report_from_scores(const std::vector<double>& scores,
                                                   const std::vector<bool>& same,
                                                   const std::vector<double>& far_targets) {
  if (scores.size() != same.size()) throw ShapeError("verification: scores/labels length mismatch");
  if (scores.empty()) throw ValidationError("verification: no pairs");
  if (!all_finite(scores)) throw NumericalError("verification: non-finite score");
  const auto positives = static_cast<std::size_t>(std::count(same.begin(), same.end(), true));
  const std::size_t negatives = same.size() - positives;
  if (negatives == 0 && !far_targets.empty()) throw ValidationError("verification: FAR targets need negative pairs");
  for (double f : far_targets) {
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("verification: FAR target outside [0, 1]");
  }

  // Descending by score; walking down lowers the threshold one distinct score at a time.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double total = static_cast<double>(scores.size());
  const auto rate = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };

  VerificationReport rep;
  std::size_t tp = 0;
  std::size_t fp = 0;
  // Threshold +inf: everything rejected.
  rep.best_threshold = std::numeric_limits<double>::infinity();
  rep.best_accuracy = static_cast<double>(negatives) / total;
  rep.roc_points.push_back({0.0, 0.0, rep.best_threshold});

  for (std::size_t idx = 0; idx < order.size();) {
    const double thr = scores[order[idx]];
    while (idx < order.size() && scores[order[idx]] == thr) {
      (same[order[idx]] ? tp : fp) += 1;
      ++idx;
    }
    const double acc = static_cast<double>(tp + (negatives - fp)) / total;
    if (acc > rep.best_accuracy) {
      rep.best_accuracy = acc;
      rep.best_threshold = thr;
    }
    rep.roc_points.push_back({rate(fp, negatives), rate(tp, positives), thr});
  }

  for (double target : far_targets) {
    TarAtFar entry{target, 0.0, 0.0, std::numeric_limits<double>::infinity()};
    for (const auto& p : rep.roc_points) {
      // Points are ordered by decreasing threshold, so the last admissible one
      // has the smallest threshold and the largest TAR.
      if (p.far <= target) entry = {target, p.tar, p.far, p.threshold};
    }
    rep.tar_at_far.push_back(entry);
  }
  return rep;
}

VerificationReport verification_report(const Matrix& embeddings, const VerificationPairs& pairs,
                                       const std::vector<double>& far_targets) {
  std::vector<double> scores;
  std::vector<bool> same;
  scores.reserve(pairs.size());
  same.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.a >= embeddings.rows() || p.b >= embeddings.rows()) throw ValidationError("verification: pair index out of range");
    scores.push_back(dot(embeddings.row(p.a), embeddings.row(p.b)));
    same.push_back(p.same);
  }
  return verification_report_from_scores(scores, same, far_targets);
}

double rank1_identification(const Matrix& probe, const Matrix& gallery,
                            const std::vector<std::size_t>& probe_labels,
                            const std::vector<std::size_t>& gallery_labels) {
  if (gallery.rows() == 0) throw ValidationError("rank1: empty gallery");
  if (probe.rows() == 0) throw ValidationError("rank1: empty probe set");
  if (probe.rows() != probe_labels.size() || gallery.rows() != gallery_labels.size()) {
    throw ShapeError("rank1: label count mismatch");
  }
  if (probe.cols() != gallery.cols()) throw ShapeError("rank1: embedding dims differ");
  const std::unordered_set<std::size_t> known(gallery_labels.begin(), gallery_labels.end());
  std::size_t hits = 0;
  for (std::size_t p = 0; p < probe.rows(); ++p) {
    if (!known.contains(probe_labels[p])) {
      throw ValidationError("rank1: probe " + std::to_string(p) + " label missing from gallery");
    }
    std::size_t best = 0;
    double best_score = dot(probe.row(p), gallery.row(0));
    for (std::size_t g = 1; g < gallery.rows(); ++g) {
      const double s = dot(probe.row(p), gallery.row(g));
      if (s > best_score) {
        best_score = s;
        best = g;
      }
    }
    hits += gallery_labels[best] == probe_labels[p] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(probe.rows());
}

std::vector<CurveRow> modulation_curves(const LossVariant& variant, const std::vector<double>& t_values,
                                        const std::vector<double>& cos_grid) {
  if (t_values.empty() || cos_grid.empty()) throw ValidationError("modulation_curves: empty grid");
  for (double c : cos_grid) {
    if (!(c >= -1.0 && c <= 1.0)) throw ValidationError("modulation_curves: cosine outside [-1, 1]");
  }
  std::vector<CurveRow> rows;
  rows.reserve(t_values.size() * cos_grid.size());
  for (double t : t_values) {
    for (double c : cos_grid) {
      rows.push_back({t, c, modulation_coefficient(c, t, variant, true), negative_transform(c, t, variant, true)});
    }
  }
  return rows;
}

void write_curves_csv(const std::vector<CurveRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const auto real = [](double v) {
    char buf[64];
    return std::string(buf, std::to_chars(buf, buf + sizeof(buf), v).ptr);
  };
  out << "t,cos_j,I,N\n";
  for (const auto& r : rows) {
    out << real(r.t) << ',' << real(r.cos_j) << ',' << real(r.modulation) << ',' << real(r.negative) << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace cmgn
