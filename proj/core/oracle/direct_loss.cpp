#include "cmgn/oracle/direct_loss.hpp"

#include <cmath>
#include <numbers>

#include "cmgn/error.hpp"

namespace cmgn::oracle {

namespace {

// T by literal transcription: cos(theta + m) with theta = acos(cos).
double literal_positive(double c, const LossVariant& v) {
  switch (v.kind) {
    case LossKind::NormalizedSoftmax: return c;
    case LossKind::CosFace: return c - v.margin;
    case LossKind::ArcFace:
    case LossKind::MvArcSoftmax:
    case LossKind::CurricularFace: {
      const double theta = std::acos(c);
      if (v.margin_fallback && theta + v.margin >= std::numbers::pi) return c - v.margin * std::sin(v.margin);
      return std::cos(theta + v.margin);
    }
  }
  return c;
}

double literal_negative(double c, double t, const LossVariant& v, bool hard) {
  if (v.kind == LossKind::MvArcSoftmax && hard) return t * c + t - 1.0;
  if (v.kind == LossKind::CurricularFace && hard) return c * (t + c);
  return c;
}

struct RowTerms {
  double numerator;
  double denominator;
  double negatives;  // denominator - numerator, summed directly
};

RowTerms row_terms(const CosineBatch& batch, std::size_t i, const LossVariant& v, double t,
                   std::vector<double>* exps, std::vector<std::uint8_t>* hard, std::vector<double>* gaps) {
  if (v.fixed_t) t = *v.fixed_t;
  const std::size_t n = batch.num_classes();
  const std::size_t y = batch.labels[i];
  const double target = literal_positive(batch.cosines(i, y), v);
  const double numerator = std::exp(v.scale * target);
  double negatives = 0.0;
  if (exps) (*exps)[y] = numerator;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == y) continue;
    const double c = batch.cosines(i, j);
    const bool is_hard = !(target - c >= 0.0);
    const double e = std::exp(v.scale * literal_negative(c, t, v, is_hard));
    negatives += e;
    if (exps) (*exps)[j] = e;
    if (hard) (*hard)[i * n + j] = is_hard ? 1 : 0;
    if (gaps) (*gaps)[i * n + j] = target - c;
  }
  return {numerator, numerator + negatives, negatives};
}

}  // namespace

double direct_loss(const CosineBatch& batch, const LossVariant& variant, double t) {
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const RowTerms r = row_terms(batch, i, variant, t, nullptr, nullptr, nullptr);
    total += std::log1p(r.negatives / r.numerator);
  }
  return total / static_cast<double>(batch.size());
}

Matrix direct_probabilities(const CosineBatch& batch, const LossVariant& variant, double t) {
  Matrix p(batch.size(), batch.num_classes());
  std::vector<double> exps(batch.num_classes());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const RowTerms r = row_terms(batch, i, variant, t, &exps, nullptr, nullptr);
    for (std::size_t j = 0; j < batch.num_classes(); ++j) p(i, j) = exps[j] / r.denominator;
  }
  return p;
}

DirectEvaluation direct_evaluate(const Matrix& features, const Matrix& classifier,
                                 const std::vector<std::size_t>& labels, const LossVariant& variant, double t) {
  if (features.cols() != classifier.rows() || features.rows() != labels.size()) {
    throw ShapeError("direct_evaluate: shape mismatch");
  }
  const std::size_t b = features.rows();
  const std::size_t d = features.cols();
  const std::size_t n = classifier.cols();
  CosineBatch batch{Matrix(b, n), labels};
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double c = 0.0;
      for (std::size_t k = 0; k < d; ++k) c += features(i, k) * classifier(k, j);
      if (c > 1.0 - 1e-7) c = 1.0 - 1e-7;
      if (c < -1.0 + 1e-7) c = -1.0 + 1e-7;
      batch.cosines(i, j) = c;
    }
  }
  DirectEvaluation ev;
  ev.hard.assign(b * n, 0);
  ev.gaps.assign(b * n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const RowTerms r = row_terms(batch, i, variant, t, nullptr, &ev.hard, &ev.gaps);
    total += std::log1p(r.negatives / r.numerator);
  }
  ev.loss = total / static_cast<double>(b);
  return ev;
}

}  // namespace cmgn::oracle
