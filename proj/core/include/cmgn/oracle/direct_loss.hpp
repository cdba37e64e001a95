#pragma once

#include <cstdint>
#include <vector>

#include "cmgn/margin_losses.hpp"

// Brute-force reference evaluation of the margin losses. Uses the shared data
// types only; no computation is delegated to the production code paths.
namespace cmgn::oracle {

// Unshifted -log(e^{sT} / (e^{sT} + sum_j e^{sN_j})) averaged over the batch,
// with T through acos/cos, evaluated as log1p(sum_j e^{sN_j} / e^{sT}) so that
// confident rows keep their digits. Overflows for s * |cos| beyond ~700; that is a
// limitation of the oracle, not of the production loss.
double direct_loss(const CosineBatch& batch, const LossVariant& variant, double t);

// Softmax probabilities of the modulated logits (B x n), unshifted.
Matrix direct_probabilities(const CosineBatch& batch, const LossVariant& variant, double t);

struct DirectEvaluation {
  double loss = 0.0;
  std::vector<std::uint8_t> hard;  // B x n branch signature
  std::vector<double> gaps;        // B x n, T(cos_gt) - cos_j (0 on ground truth)
};

// Loss as a function of raw features (B x d) and classifier weights (d x n),
// with cosines taken as plain clamped dot products, no renormalization.
DirectEvaluation direct_evaluate(const Matrix& features, const Matrix& classifier,
                                 const std::vector<std::size_t>& labels, const LossVariant& variant, double t);

}  // namespace cmgn::oracle
