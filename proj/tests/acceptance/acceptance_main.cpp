// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "cli/experiment_config.hpp"
#include "cmgn/checkpoint.hpp"
#include "cmgn/oracle/direct_loss.hpp"
#include "cmgn/oracle/grad_check.hpp"

using namespace cmgn;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = CMGN_SOURCE_DIR;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (double& x : m.data()) x = g(rng);
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Golden data and the golden CurricularFace run are shared by several criteria.
struct GoldenContext {
  cli::ExperimentConfig config;
  LabeledDataset data;
  cli::ExperimentOutcome outcome;
  double seconds = 0.0;
};

const GoldenContext& golden() {
  static const GoldenContext ctx = [] {
    GoldenContext c;
    c.config = cli::load_experiment_config(kSource / "configs/golden.json");
    c.data = generate(c.config.data);
    const auto t0 = std::chrono::steady_clock::now();
    c.outcome = cli::run_experiment(c.config, c.data);
    c.seconds = seconds_since(t0);
    return c;
  }();
  return ctx;
}

std::size_t iterations_per_epoch(const GoldenContext& g) {
  const std::size_t n = g.data.indices(Split::Train).size();
  return (n + g.config.train.batch_size - 1) / g.config.train.batch_size;
}

// 1
Verdict gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t checks = 0, compared = 0, skipped = 0;
  std::string worst_kind;
  for (LossKind kind : kAllLossKinds) {
    oracle::GradCheckOptions o;
    o.kind = kind;
    o.trials = 1000;
    o.seed = 2020;
    o.scales = {1.0, 64.0};
    o.batch = 8;
    o.classes = 10;
    o.dim = 16;
    const auto r = oracle::run_grad_check(o);
    checks += r.checks;
    compared += r.compared;
    skipped += r.skipped_band + r.skipped_flip;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_kind = std::string(to_string(kind));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs <= 60.0 && checks == 5 * 2000,
          fmt("max rel err %.3g (%s), %zu checks, %zu coords, %zu skipped in band, %.1f s", worst,
              worst_kind.c_str(), checks, compared, skipped, secs)};
}

// 2
Verdict reduction_identities() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t B = 8, n = 10, d = 16;
  double worst = 0.0;
  std::size_t easy_batches = 0;
  auto both = [&](const CosineBatch& b, const Matrix& f, const ClassifierMatrix& w, const LossVariant& va,
                  double ta, const LossVariant& vb, double tb) {
    const auto la = forward(b, va, ta), lb = forward(b, vb, tb);
    const auto ga = backward(b, va, ta, f, w), gb = backward(b, vb, tb, f, w);
    worst = std::max({worst, std::abs(la.loss - lb.loss), max_abs_diff(la.grad_cosines, lb.grad_cosines),
                      max_abs_diff(ga.features, gb.features), max_abs_diff(ga.classifier, gb.classifier)});
    return la.hard_pairs;
  };
  auto draw = [&](double pull) {
    ClassifierMatrix w(random_matrix(d, n, rng));
    std::vector<std::size_t> labels(B);
    Matrix f = random_matrix(B, d, rng);
    for (std::size_t i = 0; i < B; ++i) {
      labels[i] = i % n;
      for (std::size_t k = 0; k < d; ++k) f(i, k) = 0.05 * f(i, k) + pull * w(k, labels[i]);
    }
    l2_normalize_rows(f);
    CosineBatch b{cosine_batch(f, w), labels};
    return std::tuple{b, f, w};
  };

  // CurricularFace on batches with no hard pair equals ArcFace.
  while (easy_batches < 100) {
    auto [b, f, w] = draw(1.0);
    if (forward(b, LossVariant::curricular_face(0.5, 64), 0.0).hard_pairs != 0) continue;
    const double s = easy_batches % 2 ? 64.0 : 1.0;
    both(b, f, w, LossVariant::curricular_face(0.5, s), u(rng), LossVariant::arcface(0.5, s), 0.0);
    ++easy_batches;
  }
  for (int k = 0; k < 100; ++k) {
    auto [b, f, w] = draw(u(rng) * 2.0);
    const double s = k % 2 ? 64.0 : 1.0;
    both(b, f, w, LossVariant::arcface(0.0, s), 0.0, LossVariant::normalized_softmax(s), 0.0);
  }
  std::size_t hard_seen = 0;
  for (int k = 0; k < 100; ++k) {
    auto [b, f, w] = draw(u(rng) * 2.0);
    const double s = k % 2 ? 64.0 : 1.0;
    hard_seen += both(b, f, w, LossVariant::mv_arc_softmax(0.5, s, 1.0), 1.0, LossVariant::arcface(0.5, s), 0.0);
  }
  return {worst <= 1e-12 && hard_seen > 0,
          fmt("max |diff| %.3g over 3 x 100 batches (loss, dL/dcos, dL/dx, dL/dW)", worst)};
}

// 3
Verdict oracle_equivalence() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0), c(-0.95, 0.95);
  std::uniform_int_distribution<std::size_t> lab(0, 9);
  double worst = 0.0;
  std::size_t comparisons = 0;
  for (int k = 0; k < 1000; ++k) {
    CosineBatch b{Matrix(8, 10), std::vector<std::size_t>(8)};
    for (double& x : b.cosines.data()) x = c(rng);
    for (std::size_t i = 0; i < 8; ++i) {
      b.labels[i] = lab(rng);
      b.cosines(i, b.labels[i]) = -0.5 + 1.49 * u(rng);
    }
    const double s = 1.0 + 63.0 * u(rng);
    for (LossKind kind : kAllLossKinds) {
      LossVariant v{kind, kind == LossKind::CosFace ? 0.1 + 0.4 * u(rng) : 0.2 + 0.4 * u(rng), s, std::nullopt};
      double t = u(rng);
      if (kind == LossKind::MvArcSoftmax) {
        t = 1.0 + 0.5 * u(rng);
        v.fixed_t = t;
      }
      const double a = forward(b, v, t).loss;
      const double o = oracle::direct_loss(b, v, t);
      worst = std::max(worst, std::abs(a - o) / std::max(1.0, std::abs(o)));
      ++comparisons;
    }
  }
  return {worst <= 1e-10, fmt("max scaled |diff| %.3g over %zu batch x variant comparisons", worst, comparisons)};
}

// 4
Verdict ema_contraction() {
  double worst = 0.0;
  for (double rbar : {0.8, 0.35, 1.0}) {
    CurriculumState s;
    for (int k = 1; k <= 10000; ++k) {
      s = update_t(s, rbar);
      worst = std::max(worst, std::abs(std::abs(s.t - rbar) - rbar * std::pow(s.momentum, k)));
    }
  }
  // Replay the golden run's r column.
  const auto& trace = golden().outcome.result.trace;
  std::size_t mismatches = 0;
  double t = 0.0;
  const double a = golden().config.train.curriculum_momentum;
  for (const auto& rec : trace) {
    t = (1.0 - a) * rec.r + a * t;
    mismatches += t != rec.t;
  }
  return {worst <= 1e-12 && mismatches == 0 && !trace.empty(),
          fmt("max contraction error %.3g over 1e4 steps; replay of %zu traced steps: %zu mismatches", worst,
              trace.size(), mismatches)};
}

// 5
Verdict decision_boundaries() {
  struct Case {
    LossVariant v;
    double t;
    bool hard;
    std::function<double(double)> closed;  // theta_j -> theta_gt on the boundary
  };
  const double m = 0.5, mc = 0.35;
  std::vector<Case> cases{
      {LossVariant::normalized_softmax(64), 0.0, false, [](double tj) { return tj; }},
      {LossVariant::cosface(mc, 64), 0.0, false, [&](double tj) { return std::acos(std::cos(tj) + mc); }},
      {LossVariant::arcface(m, 64), 0.0, false, [&](double tj) { return tj - m; }},
      {LossVariant::mv_arc_softmax(m, 64, 1.2), 1.2, false, [&](double tj) { return tj - m; }},
      {LossVariant::curricular_face(m, 64), 0.3, false, [&](double tj) { return tj - m; }},
  };
  for (double t : {1.0, 1.1, 1.2})
    cases.push_back({LossVariant::mv_arc_softmax(m, 64, t), t, true,
                     [=](double tj) { return std::acos(t * std::cos(tj) + t - 1.0) - m; }});
  for (double t : {0.0, 0.3, 0.7, 1.0})
    cases.push_back({LossVariant::curricular_face(m, 64), t, true,
                     [=](double tj) { return std::acos((t + std::cos(tj)) * std::cos(tj)) - m; }});

  double worst = 0.0;
  std::size_t solved = 0;
  for (const auto& c : cases) {
    const double upper = c.v.angular_margin() ? std::numbers::pi - c.v.margin : std::numbers::pi;
    for (int i = 0; i < 200; ++i) {
      const double tj = 1.0 + 1.5 * i / 199.0;
      const double target = negative_transform(std::cos(tj), c.t, c.v, c.hard);
      // T(cos theta) is decreasing in theta on [0, upper]: bisect T = N.
      double lo = 0.0, hi = upper;
      while (hi - lo > 1e-15) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (positive_transform(std::cos(mid), c.v) > target ? lo : hi) = mid;
      }
      worst = std::max(worst, std::abs(0.5 * (lo + hi) - c.closed(tj)));
      ++solved;
    }
  }
  return {worst <= 1e-9, fmt("max |theta_gt - closed form| %.3g over %zu boundary points (%zu curves x 200)", worst,
                             solved, cases.size())};
}

// 6
Verdict toy_convergence() {
  const auto& g = golden();
  auto baseline = g.config;
  baseline.name = "softmax";
  baseline.train.variant = LossVariant::normalized_softmax(g.config.train.variant.scale);
  const auto t0 = std::chrono::steady_clock::now();
  const auto base = cli::run_experiment(baseline, g.data);
  const double secs = g.seconds + seconds_since(t0);
  const double acc = g.outcome.train_accuracy;
  const double ver = g.outcome.verification.best_accuracy;
  const double ref = base.verification.best_accuracy;
  const bool shape_ok = g.data.num_classes() == 10 && g.data.input_dim() == 16 && g.config.train.epochs <= 30 &&
                        g.config.data.samples_per_class == 200 && g.config.data.noise_sigma == 0.15 &&
                        g.config.train.variant.kind == LossKind::CurricularFace;
  return {shape_ok && acc >= 0.95 && ver >= ref - 0.01 && secs <= 300.0,
          fmt("train acc %.4f, holdout verification %.4f vs softmax %.4f, %.1f s", acc, ver, ref, secs)};
}

// 7
Verdict curriculum_progression() {
  const auto& g = golden();
  const auto& tr = g.outcome.result.trace;
  const std::size_t per = iterations_per_epoch(g);
  if (tr.size() < 2 * per) return {false, "trace shorter than two epochs"};
  const double t_epoch1 = tr[per - 1].t;
  const double t_final = tr.back().t;
  double h1 = 0.0, hl = 0.0;
  for (std::size_t k = 0; k < per; ++k) h1 += tr[k].hard_fraction;
  for (std::size_t k = tr.size() - per; k < tr.size(); ++k) hl += tr[k].hard_fraction;
  h1 /= per;
  hl /= per;
  return {t_final > t_epoch1 && hl < h1,
          fmt("t: %.4f after epoch 1 -> %.4f final; hard fraction mean: %.4f epoch 1 -> %.4f final epoch", t_epoch1,
              t_final, h1, hl)};
}

// 8
Verdict convergence_robustness() {
  auto cur = cli::load_experiment_config(kSource / "configs/hard.json");
  const auto data = generate(cur.data);
  auto arc = cur;
  arc.train.variant = LossVariant::arcface(cur.train.variant.margin, cur.train.variant.scale);
  const auto rc = train(cur.train, data);
  const auto ra = train(arc.train, data);
  auto finite = [](const TrainResult& r) {
    for (const auto& rec : r.trace)
      if (!std::isfinite(rec.loss) || !std::isfinite(rec.t) || !std::isfinite(rec.r)) return false;
    auto v = r.snapshot.velocity;
    bool ok = v.all_finite();
    for (const auto& l : r.snapshot.params.layers) ok = ok && all_finite(l.weights.data()) && all_finite(l.biases);
    return ok && all_finite(r.snapshot.params.classifier.weights().data());
  };
  if (rc.trace.size() < 200 || ra.trace.size() < 200) return {false, "fewer than 200 iterations"};
  double mc = 0.0, ma = 0.0;
  for (std::size_t k = 0; k < 200; ++k) {
    mc += rc.trace[k].loss;
    ma += ra.trace[k].loss;
  }
  mc /= 200;
  ma /= 200;
  const bool shape_ok = cur.data.num_classes == 50 && cur.data.noise_sigma == 0.3 &&
                        cur.train.variant.margin == 0.5 && cur.train.variant.kind == LossKind::CurricularFace;
  return {shape_ok && finite(rc) && finite(ra) && mc <= ma,
          fmt("mean loss over iterations 1-200: CurricularFace %.4f, ArcFace %.4f; %zu/%zu iterations, all finite: %s",
              mc, ma, rc.trace.size(), ra.trace.size(), finite(rc) && finite(ra) ? "yes" : "no")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 9
Verdict ablation_harness() {
  const fs::path dir = fs::temp_directory_path() / "cmgn_acceptance_ablation";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_csv(golden().data, dir / "golden.csv");
  const fs::path ab = kSource / "configs/ablation";
  const std::vector<fs::path> t_rows{ab / "t_fixed_0.json", ab / "t_fixed_0_3.json", ab / "t_fixed_0_7.json",
                                     ab / "t_fixed_1.json", ab / "t_adaptive.json"};
  const std::vector<fs::path> s_rows{ab / "stat_mode_cos.json", ab / "stat_mean_prob.json",
                                     ab / "stat_mean_cos.json"};
  std::ostringstream os, err;
  int rc = 0;
  rc |= cli::cmd_compare(t_rows, dir / "golden.csv", dir / "t1.csv", os, err);
  rc |= cli::cmd_compare(t_rows, dir / "golden.csv", dir / "t2.csv", os, err);
  rc |= cli::cmd_compare(s_rows, dir / "golden.csv", dir / "s1.csv", os, err);
  rc |= cli::cmd_compare(s_rows, dir / "golden.csv", dir / "s2.csv", os, err);
  if (rc != 0) return {false, "compare failed: " + err.str()};
  const std::string t1 = slurp(dir / "t1.csv"), s1 = slurp(dir / "s1.csv");
  const bool deterministic = t1 == slurp(dir / "t2.csv") && s1 == slurp(dir / "s2.csv");
  const auto rows_of = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n') - 1; };

  // Parse the verification column back out of the t table.
  std::istringstream in(t1);
  std::string line;
  std::getline(in, line);
  double best_fixed = -1.0, adaptive = -1.0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    if (f.size() < 5) return {false, "malformed row: " + line};
    const double acc = std::stod(f[4]);
    if (f[2] == "adaptive") adaptive = acc;
    else best_fixed = std::max(best_fixed, acc);
  }
  fs::remove_all(dir);
  return {deterministic && rows_of(t1) == 5 && rows_of(s1) == 3 && adaptive >= best_fixed - 0.005,
          fmt("%ld t rows, %ld statistic rows, reruns identical: %s; adaptive %.4f vs best fixed %.4f",
              static_cast<long>(rows_of(t1)), static_cast<long>(rows_of(s1)), deterministic ? "yes" : "no", adaptive,
              best_fixed)};
}

// 10
Verdict determinism_and_resume() {
  const auto& g = golden();
  const auto& full = g.outcome.result;
  const auto again = train(g.config.train, g.data);
  const bool rerun_same = again.trace == full.trace && again.snapshot == full.snapshot;

  auto head_cfg = g.config.train;
  head_cfg.epochs = g.config.train.epochs / 2;
  const auto head = train(head_cfg, g.data);
  const fs::path ckpt = fs::temp_directory_path() / "cmgn_acceptance_resume.ckpt";
  save_checkpoint(head.snapshot, ckpt);
  const auto loaded = load_checkpoint(ckpt);
  fs::remove(ckpt);
  const auto tail = train(g.config.train, g.data, loaded);
  TrainTrace joined = head.trace;
  joined.insert(joined.end(), tail.trace.begin(), tail.trace.end());
  const bool resume_same = joined == full.trace && tail.snapshot == full.snapshot;
  return {rerun_same && resume_same && loaded == head.snapshot,
          fmt("rerun bit-identical: %s; resume after epoch %zu of %zu bit-identical: %s", rerun_same ? "yes" : "no",
              head_cfg.epochs, g.config.train.epochs, resume_same ? "yes" : "no")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Verdict (*run)();
  };
  const Criterion criteria[] = {
      {1, "gradient correctness", gradient_correctness},
      {2, "reduction identities", reduction_identities},
      {3, "oracle equivalence", oracle_equivalence},
      {4, "moving-average contraction and replay", ema_contraction},
      {5, "decision boundaries", decision_boundaries},
      {6, "toy training convergence", toy_convergence},
      {7, "curriculum progression", curriculum_progression},
      {8, "convergence robustness", convergence_robustness},
      {9, "ablation harness", ablation_harness},
      {10, "determinism and persistence", determinism_and_resume},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %2d %s: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
