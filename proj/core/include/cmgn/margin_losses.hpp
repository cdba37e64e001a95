#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cmgn/numerics.hpp"

namespace cmgn {

enum class LossKind { NormalizedSoftmax, CosFace, ArcFace, MvArcSoftmax, CurricularFace };

inline constexpr LossKind kAllLossKinds[] = {LossKind::NormalizedSoftmax, LossKind::CosFace,
                                             LossKind::ArcFace, LossKind::MvArcSoftmax,
                                             LossKind::CurricularFace};

// Canonical lower-case names: softmax, cosface, arcface, mv-arc-softmax, curricularface.
std::string_view to_string(LossKind kind);
// Accepts the canonical names plus a few aliases ("curricular", "mv", "normalized-softmax").
LossKind parse_loss_kind(std::string_view name);

// Which positive/negative transforms the loss applies.
//
// margin: radians for the angular variants (ArcFace, MvArcSoftmax,
// CurricularFace), a cosine offset for CosFace, unused for NormalizedSoftmax.
// fixed_t: required for MvArcSoftmax (>= 1); optional for CurricularFace, where
// it replaces the adaptive estimate.
// margin_fallback: for angular variants, use T = cos_gt - m sin(m) once
// theta + m >= pi instead of the angle-addition identity. Off by default; the
// identity is not monotone past pi - m and admits a collapsed solution with
// theta_gt -> pi for every sample.
struct LossVariant {
  LossKind kind = LossKind::CurricularFace;
  double margin = 0.5;
  double scale = 64.0;
  std::optional<double> fixed_t;
  bool margin_fallback = false;

  // Throws ValidationError if an invariant does not hold.
  void validate() const;
  bool angular_margin() const noexcept;

  static LossVariant normalized_softmax(double scale);
  static LossVariant cosface(double margin, double scale);
  static LossVariant arcface(double margin, double scale);
  static LossVariant mv_arc_softmax(double margin, double scale, double t);
  static LossVariant curricular_face(double margin, double scale);

  bool operator==(const LossVariant&) const = default;
};

// The t the loss should use: fixed_t when set, otherwise the adaptive value.
double effective_t(const LossVariant& variant, double adaptive_t) noexcept;

// Per-sample cosines to every class center (B x n) and ground-truth labels.
struct CosineBatch {
  Matrix cosines;
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t num_classes() const noexcept { return cosines.cols(); }
  double positive(std::size_t i) const { return cosines(i, labels[i]); }

  void validate() const;
};

struct LossOutput {
  double loss = 0.0;                       // batch mean
  Matrix grad_cosines;                     // dL/dcos, B x n
  std::vector<std::uint8_t> hard_mask;     // B x n row-major; 0 on ground-truth columns
  double r_stat = 0.0;                     // mean positive cosine
  std::vector<double> prob_gt;             // p(x_i)
  std::size_t hard_pairs = 0;
  double hard_fraction = 0.0;              // hard pairs / (B * (n - 1))
  double m_min = 1.0;                      // range of the hard-pair gradient coefficient;
  double m_max = 1.0;                      // both 1 when no pair is hard

  bool is_hard(std::size_t i, std::size_t j) const { return hard_mask[i * grad_cosines.cols() + j] != 0; }
};

// T(cos_gt). Angular variants use cos(theta + m) through the angle-addition
// identity with sin(theta) = sqrt(1 - cos_gt^2), or the linear fallback when
// enabled and theta + m >= pi.
double positive_transform(double cos_gt, const LossVariant& variant);

// True iff T(cos_gt) - cos_j < 0. Ties are easy.
bool classify_hard(double cos_gt, double cos_j, const LossVariant& variant);

// N(t, cos_j).
double negative_transform(double cos_j, double t, const LossVariant& variant, bool is_hard);

// I(t, cos_j) in N = I * cos_j + c.
double modulation_coefficient(double cos_j, double t, const LossVariant& variant, bool is_hard);

// The constant c in N = I * cos_j + c (t - 1 for hard MV-Arc-Softmax pairs, else 0).
double negative_offset(double t, const LossVariant& variant, bool is_hard);

// M = 2 cos_j + t, the CurricularFace hard-pair gradient coefficient.
double gradient_modulation(double cos_j, double t);

// dN/dcos_j: 1 for easy pairs and plain variants, t for hard MV pairs,
// 2 cos_j + t for hard CurricularFace pairs.
double negative_derivative(double cos_j, double t, const LossVariant& variant, bool is_hard);

// dT/dcos_gt: sin(theta + m) / sin(theta) for angular variants (1 on the
// fallback branch), else 1.
double positive_derivative(double cos_gt, const LossVariant& variant);

// Mean cross-entropy over scaled modulated logits, with dL/dcos. A fixed_t on
// the variant takes precedence over `t`.
// Throws NumericalError naming the sample when an intermediate is not finite.
LossOutput forward(const CosineBatch& batch, const LossVariant& variant, double t);

struct EmbeddingGradients {
  Matrix features;    // B x d
  Matrix classifier;  // d x n
};

// dL/dx_i = sum_j g_ij W_j and dL/dW_j = sum_i g_ij x_i for g = dL/dcos.
EmbeddingGradients chain_to_embeddings(const Matrix& grad_cosines, const Matrix& features,
                                       const ClassifierMatrix& classifier);

// Full backward pass: forward() followed by chain_to_embeddings().
EmbeddingGradients backward(const CosineBatch& batch, const LossVariant& variant, double t,
                            const Matrix& features, const ClassifierMatrix& classifier);

}  // namespace cmgn
