#include "cmgn/oracle/grad_check.hpp"

#include <cmath>
#include <random>

#include "cmgn/oracle/direct_loss.hpp"

namespace cmgn::oracle {

namespace {

struct RandomProblem {
  Matrix features;    // B x d, unit rows
  Matrix classifier;  // d x n, unit columns
  std::vector<std::size_t> labels;
  LossVariant variant;
  double t = 0.0;
};

RandomProblem draw_problem(const GradCheckOptions& o, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> label(0, o.classes - 1);

  RandomProblem p;
  p.classifier = Matrix(o.dim, o.classes);
  for (double& w : p.classifier.data()) w = gauss(rng);
  for (std::size_t j = 0; j < o.classes; ++j) {
    double ss = 0.0;
    for (std::size_t k = 0; k < o.dim; ++k) ss += p.classifier(k, j) * p.classifier(k, j);
    const double nrm = std::sqrt(ss);
    for (std::size_t k = 0; k < o.dim; ++k) p.classifier(k, j) /= nrm;
  }

  // Pull each sample towards its class center by a random amount so positive
  // cosines cover roughly [0, 0.95].
  p.features = Matrix(o.batch, o.dim);
  p.labels.resize(o.batch);
  const double noise = 1.0 / std::sqrt(static_cast<double>(o.dim));
  for (std::size_t i = 0; i < o.batch; ++i) {
    p.labels[i] = label(rng);
    const double pull = 3.0 * unit(rng);
    double ss = 0.0;
    for (std::size_t k = 0; k < o.dim; ++k) {
      const double v = pull * p.classifier(k, p.labels[i]) + noise * gauss(rng);
      p.features(i, k) = v;
      ss += v * v;
    }
    const double nrm = std::sqrt(ss);
    for (std::size_t k = 0; k < o.dim; ++k) p.features(i, k) /= nrm;
  }

  p.variant.kind = o.kind;
  switch (o.kind) {
    case LossKind::NormalizedSoftmax: p.variant.margin = 0.0; break;
    case LossKind::CosFace: p.variant.margin = 0.1 + 0.4 * unit(rng); break;
    default: p.variant.margin = 0.2 + 0.4 * unit(rng); break;
  }
  if (o.kind == LossKind::MvArcSoftmax) {
    p.variant.fixed_t = 1.0 + 0.5 * unit(rng);
    p.t = *p.variant.fixed_t;
  } else if (o.kind == LossKind::CurricularFace) {
    p.t = unit(rng);
  }
  return p;
}

}  // namespace

GradCheckReport run_grad_check(const GradCheckOptions& o) {
  GradCheckReport rep;
  std::mt19937_64 rng(o.seed);
  const std::size_t nf = o.batch * o.dim;

  for (std::size_t trial = 0; trial < o.trials; ++trial) {
    RandomProblem prob = draw_problem(o, rng);
    for (double scale : o.scales) {
      prob.variant.scale = scale;
      const ClassifierMatrix head(prob.classifier);
      const CosineBatch batch{cosine_batch(prob.features, head), prob.labels};
      const EmbeddingGradients g = backward(batch, prob.variant, prob.t, prob.features, head);

      std::vector<double> point(prob.features.data());
      point.insert(point.end(), prob.classifier.data().begin(), prob.classifier.data().end());
      std::vector<double> analytic(g.features.data());
      analytic.insert(analytic.end(), g.classifier.data().begin(), g.classifier.data().end());

      const PiecewiseFunction fn = [&](std::span<const double> x) {
        Matrix feats(o.batch, o.dim, std::vector<double>(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nf)));
        Matrix w(o.dim, o.classes, std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(nf), x.end()));
        DirectEvaluation ev = direct_evaluate(feats, w, prob.labels, prob.variant, prob.t);
        return PiecewiseSample{ev.loss, std::move(ev.hard), std::move(ev.gaps)};
      };
      const FiniteDiffResult fd = finite_diff_grad(fn, point, o.fd);
      const GradientComparison cmp = compare_gradients(analytic, fd);

      ++rep.checks;
      rep.compared += cmp.compared;
      rep.skipped_flip += fd.skipped_flip;
      rep.skipped_band += fd.skipped_band;
      if (cmp.compared > 0 && (rep.checks == 1 || cmp.max_rel_error > rep.max_rel_error)) {
        rep.max_rel_error = cmp.max_rel_error;
        rep.worst_trial = trial;
        rep.worst_scale = scale;
        rep.worst_coordinate = cmp.worst_index;
        rep.worst_analytic = analytic[cmp.worst_index];
        rep.worst_numeric = fd.gradient[cmp.worst_index];
      }
    }
  }
  return rep;
}

}  // namespace cmgn::oracle
