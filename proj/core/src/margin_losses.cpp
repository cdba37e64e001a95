#include "cmgn/margin_losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cmgn/error.hpp"

namespace cmgn {

namespace {

#ifdef CMGN_MUTATION
// Test fixture only: a tiny corruption that the oracle comparisons must catch.
constexpr double kMutantNegativeShift = 1e-8;
constexpr double kMutantGradientScale = 1.0 + 1e-5;
#endif

std::string sample_context(std::size_t i) { return "sample " + std::to_string(i); }

// theta + m >= pi  <=>  cos_gt <= cos(pi - m) = -cos(m)
bool on_fallback_branch(double cos_gt, const LossVariant& v) {
  return v.margin_fallback && cos_gt <= -std::cos(v.margin);
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::NormalizedSoftmax: return "softmax";
    case LossKind::CosFace: return "cosface";
    case LossKind::ArcFace: return "arcface";
    case LossKind::MvArcSoftmax: return "mv-arc-softmax";
    case LossKind::CurricularFace: return "curricularface";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "softmax" || name == "normalized-softmax" || name == "norm-softmax") return LossKind::NormalizedSoftmax;
  if (name == "cosface") return LossKind::CosFace;
  if (name == "arcface") return LossKind::ArcFace;
  if (name == "mv-arc-softmax" || name == "mv" || name == "mv-arcsoftmax") return LossKind::MvArcSoftmax;
  if (name == "curricularface" || name == "curricular") return LossKind::CurricularFace;
  throw ValidationError("unknown loss variant '" + std::string(name) + "'");
}

bool LossVariant::angular_margin() const noexcept {
  return kind == LossKind::ArcFace || kind == LossKind::MvArcSoftmax ||
         kind == LossKind::CurricularFace;
}

void LossVariant::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ValidationError("scale must be positive and finite");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw ValidationError("margin must be non-negative");
  if (angular_margin() && !(margin < std::numbers::pi / 2)) {
    throw ValidationError("angular margin must be below pi/2");
  }
  switch (kind) {
    case LossKind::MvArcSoftmax:
      if (!fixed_t) throw ValidationError("mv-arc-softmax requires fixed_t");
      if (!(*fixed_t >= 1.0) || !std::isfinite(*fixed_t)) throw ValidationError("mv-arc-softmax requires fixed_t >= 1");
      break;
    case LossKind::CurricularFace:
      if (fixed_t && !std::isfinite(*fixed_t)) throw ValidationError("fixed_t must be finite");
      break;
    default:
      if (fixed_t) throw ValidationError(std::string(to_string(kind)) + " takes no t parameter");
  }
  if (margin_fallback && !angular_margin()) {
    throw ValidationError("margin_fallback applies to angular-margin variants only");
  }
}

LossVariant LossVariant::normalized_softmax(double scale) {
  return {LossKind::NormalizedSoftmax, 0.0, scale, std::nullopt, false};
}
LossVariant LossVariant::cosface(double margin, double scale) {
  return {LossKind::CosFace, margin, scale, std::nullopt, false};
}
LossVariant LossVariant::arcface(double margin, double scale) {
  return {LossKind::ArcFace, margin, scale, std::nullopt, false};
}
LossVariant LossVariant::mv_arc_softmax(double margin, double scale, double t) {
  return {LossKind::MvArcSoftmax, margin, scale, t, false};
}
LossVariant LossVariant::curricular_face(double margin, double scale) {
  return {LossKind::CurricularFace, margin, scale, std::nullopt, false};
}

double effective_t(const LossVariant& variant, double adaptive_t) noexcept {
  return variant.fixed_t.value_or(adaptive_t);
}

void CosineBatch::validate() const {
  if (labels.empty()) throw ValidationError("empty batch");
  if (cosines.rows() != labels.size()) {
    throw ShapeError("batch has " + std::to_string(cosines.rows()) + " cosine rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (cosines.cols() < 2) throw ShapeError("batch needs at least two classes");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= cosines.cols()) throw ValidationError("label out of range for " + sample_context(i));
    for (double c : cosines.row(i)) {
      if (!std::isfinite(c)) throw NumericalError("non-finite cosine at " + sample_context(i));
      if (!(c >= kCosineMin && c <= kCosineMax)) {
        throw ValidationError("cosine outside clamp range for " + sample_context(i));
      }
    }
  }
}

double positive_transform(double cos_gt, const LossVariant& variant) {
  switch (variant.kind) {
    case LossKind::NormalizedSoftmax: return cos_gt;
    case LossKind::CosFace: return cos_gt - variant.margin;
    default: {
      if (on_fallback_branch(cos_gt, variant)) return cos_gt - variant.margin * std::sin(variant.margin);
      const double sin_gt = std::sqrt(std::max(0.0, 1.0 - cos_gt * cos_gt));
      return cos_gt * std::cos(variant.margin) - sin_gt * std::sin(variant.margin);
    }
  }
}

double positive_derivative(double cos_gt, const LossVariant& variant) {
  if (!variant.angular_margin() || on_fallback_branch(cos_gt, variant)) return 1.0;
  const double sin_gt = std::sqrt(std::max(0.0, 1.0 - cos_gt * cos_gt));
  // d/dc [c cos m - sqrt(1 - c^2) sin m] = cos m + c sin m / sin(theta)
  return std::cos(variant.margin) + cos_gt * std::sin(variant.margin) / sin_gt;
}

bool classify_hard(double cos_gt, double cos_j, const LossVariant& variant) {
  return positive_transform(cos_gt, variant) - cos_j < 0.0;
}

double modulation_coefficient(double cos_j, double t, const LossVariant& variant, bool is_hard) {
  if (!is_hard) return 1.0;
  switch (variant.kind) {
    case LossKind::MvArcSoftmax: return t;
    case LossKind::CurricularFace: return t + cos_j;
    default: return 1.0;
  }
}

double negative_offset(double t, const LossVariant& variant, bool is_hard) {
  return (is_hard && variant.kind == LossKind::MvArcSoftmax) ? t - 1.0 : 0.0;
}

double negative_transform(double cos_j, double t, const LossVariant& variant, bool is_hard) {
  if (!is_hard) return cos_j;
  switch (variant.kind) {
    case LossKind::MvArcSoftmax: return t * cos_j + t - 1.0;
    case LossKind::CurricularFace: return (t + cos_j) * cos_j;
    default: return cos_j;
  }
}

double gradient_modulation(double cos_j, double t) { return 2.0 * cos_j + t; }

double negative_derivative(double cos_j, double t, const LossVariant& variant, bool is_hard) {
  if (!is_hard) return 1.0;
  switch (variant.kind) {
    case LossKind::MvArcSoftmax: return t;
    case LossKind::CurricularFace: return gradient_modulation(cos_j, t);
    default: return 1.0;
  }
}

LossOutput forward(const CosineBatch& batch, const LossVariant& variant, double t) {
  batch.validate();
  t = effective_t(variant, t);
  if (!std::isfinite(t)) throw NumericalError("curriculum parameter t is not finite");
  const std::size_t b = batch.size();
  const std::size_t n = batch.num_classes();
  const double s = variant.scale;
  const double inv_b = 1.0 / static_cast<double>(b);

  LossOutput out;
  out.grad_cosines = Matrix(b, n);
  out.hard_mask.assign(b * n, 0);
  out.prob_gt.resize(b);

  std::vector<double> logits(n);
  std::vector<double> dnegative(n);
  double loss_sum = 0.0;
  double r_sum = 0.0;
  bool any_hard = false;

  for (std::size_t i = 0; i < b; ++i) {
    const auto cos_row = batch.cosines.row(i);
    const std::size_t y = batch.labels[i];
    const double cos_gt = cos_row[y];
    const double target = positive_transform(cos_gt, variant);
    r_sum += cos_gt;

    for (std::size_t j = 0; j < n; ++j) {
      if (j == y) {
        logits[j] = s * target;
        continue;
      }
      const bool hard = target - cos_row[j] < 0.0;
      out.hard_mask[i * n + j] = hard ? 1 : 0;
      double negative = negative_transform(cos_row[j], t, variant, hard);
#ifdef CMGN_MUTATION
      negative += kMutantNegativeShift;
#endif
      logits[j] = s * negative;
      dnegative[j] = negative_derivative(cos_row[j], t, variant, hard);
      if (hard) {
        ++out.hard_pairs;
        const double m = dnegative[j];
        if (!any_hard) {
          out.m_min = out.m_max = m;
          any_hard = true;
        } else {
          out.m_min = std::min(out.m_min, m);
          out.m_max = std::max(out.m_max, m);
        }
      }
    }

    if (!all_finite(logits)) throw NumericalError("non-finite logit at " + sample_context(i));
    const std::vector<double> log_probs = stable_log_softmax(logits);
    const double sample_loss = -log_probs[y];
    if (!std::isfinite(sample_loss)) throw NumericalError("non-finite loss at " + sample_context(i));
    loss_sum += sample_loss;
    out.prob_gt[i] = std::exp(log_probs[y]);

    // p_y - 1 written as minus the other probabilities: no cancellation when p_y -> 1.
    double rest = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != y) rest += std::exp(log_probs[j]);
    }
    auto grad_row = out.grad_cosines.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double dlogit = (j == y ? -rest : std::exp(log_probs[j])) * inv_b;
      double coeff = (j == y) ? positive_derivative(cos_gt, variant) : dnegative[j];
#ifdef CMGN_MUTATION
      if (j != y) coeff *= kMutantGradientScale;
#endif
      grad_row[j] = dlogit * s * coeff;
    }
    if (!all_finite(grad_row)) throw NumericalError("non-finite gradient at " + sample_context(i));
  }

  out.loss = loss_sum * inv_b;
  out.r_stat = r_sum * inv_b;
  out.hard_fraction = static_cast<double>(out.hard_pairs) / static_cast<double>(b * (n - 1));
  return out;
}

EmbeddingGradients chain_to_embeddings(const Matrix& grad_cosines, const Matrix& features,
                                       const ClassifierMatrix& classifier) {
  const std::size_t b = features.rows();
  const std::size_t d = features.cols();
  const std::size_t n = classifier.num_classes();
  if (grad_cosines.rows() != b || grad_cosines.cols() != n || classifier.dim() != d) {
    throw ShapeError("chain_to_embeddings: shape mismatch");
  }
  const Matrix& w = classifier.weights();
  EmbeddingGradients g{Matrix(b, d), Matrix(d, n)};
  for (std::size_t i = 0; i < b; ++i) {
    const auto gi = grad_cosines.row(i);
    const auto xi = features.row(i);
    auto gx = g.features.row(i);
    for (std::size_t k = 0; k < d; ++k) {
      const auto wk = w.row(k);
      auto gwk = g.classifier.row(k);
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        acc += gi[j] * wk[j];
        gwk[j] += gi[j] * xi[k];
      }
      gx[k] = acc;
    }
  }
  return g;
}

EmbeddingGradients backward(const CosineBatch& batch, const LossVariant& variant, double t,
                            const Matrix& features, const ClassifierMatrix& classifier) {
  const LossOutput out = forward(batch, variant, t);
  return chain_to_embeddings(out.grad_cosines, features, classifier);
}

}  // namespace cmgn
