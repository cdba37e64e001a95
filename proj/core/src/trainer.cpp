#include "cmgn/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "cmgn/error.hpp"

namespace cmgn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ValidationError("weight_decay must be >= 0");
  if (!(lr_decay_factor > 0.0) || !std::isfinite(lr_decay_factor)) throw ValidationError("lr_decay_factor must be > 0");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  for (std::size_t i = 1; i < lr_decay_epochs.size(); ++i) {
    if (lr_decay_epochs[i] <= lr_decay_epochs[i - 1]) {
      throw ValidationError("lr_decay_epochs must be strictly increasing");
    }
  }
  if (model.embedding_dim < 2) throw ValidationError("embedding_dim must be >= 2");
  for (std::size_t h : model.hidden_dims) {
    if (h == 0) throw ValidationError("hidden layer widths must be positive");
  }
  variant.validate();
  CurriculumState{0.0, curriculum_momentum, 0, statistic_kind, momentum_placement}.validate();
}

double learning_rate_at(const TrainConfig& config, std::size_t epoch) {
  double lr = config.learning_rate;
  for (std::size_t e : config.lr_decay_epochs) {
    if (epoch >= e) lr *= config.lr_decay_factor;
  }
  return lr;
}

namespace {

void momentum_update(std::span<double> param, std::span<const double> grad, std::span<double> vel,
                     double mu, double wd, double lr) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    vel[i] = mu * vel[i] + grad[i] + wd * param[i];
    param[i] -= lr * vel[i];
  }
}

std::mt19937_64 epoch_rng(std::uint64_t seed, std::size_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  return std::mt19937_64(seq);
}

}  // namespace

void sgd_step(ModelParams& params, const ModelTensors& grads, ModelTensors& velocity,
              const TrainConfig& config, std::size_t epoch, std::uint64_t iteration) {
  if (grads.weights.size() != params.layers.size() || velocity.weights.size() != params.layers.size() ||
      grads.classifier.rows() != params.classifier.dim() ||
      grads.classifier.cols() != params.classifier.num_classes() ||
      velocity.classifier.rows() != params.classifier.dim() ||
      velocity.classifier.cols() != params.classifier.num_classes()) {
    throw ShapeError("sgd_step: gradient/velocity shapes do not match parameters");
  }
  if (!grads.all_finite()) {
    throw NumericalError("non-finite gradient at iteration " + std::to_string(iteration));
  }
  const double lr = learning_rate_at(config, epoch);
  const double mu = config.momentum;
  const double wd = config.weight_decay;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    if (grads.weights[l].size() != layer.weights.size() || grads.biases[l].size() != layer.biases.size()) {
      throw ShapeError("sgd_step: layer " + std::to_string(l) + " shape mismatch");
    }
    momentum_update(layer.weights.data(), grads.weights[l].data(), velocity.weights[l].data(), mu, wd, lr);
    momentum_update(layer.biases, grads.biases[l], velocity.biases[l], mu, 0.0, lr);
  }
  momentum_update(params.classifier.mutable_weights().data(), grads.classifier.data(),
                  velocity.classifier.data(), mu, wd, lr);
  params.classifier.renormalize();
}

TrainingSnapshot initial_snapshot(const TrainConfig& config, std::size_t input_dim, std::size_t num_classes) {
  TrainingSnapshot snap;
  snap.params = init_model(config.model, input_dim, num_classes, config.seed);
  snap.velocity = ModelTensors::zeros_like(snap.params);
  snap.curriculum = CurriculumState{0.0, config.curriculum_momentum, 0, config.statistic_kind,
                                    config.momentum_placement};
  return snap;
}

TrainResult train(const TrainConfig& config, const LabeledDataset& dataset,
                  std::optional<TrainingSnapshot> resume) {
  config.validate();
  const std::size_t n_classes = dataset.num_classes();
  if (n_classes < 2) throw ValidationError("train: dataset needs at least two classes");
  dataset.validate(n_classes);

  TrainResult result;
  result.snapshot = resume ? std::move(*resume) : initial_snapshot(config, dataset.input_dim(), n_classes);
  TrainingSnapshot& snap = result.snapshot;
  snap.params.validate();
  snap.curriculum.validate();
  if (snap.params.input_dim() != dataset.input_dim() || snap.params.num_classes() != n_classes) {
    throw ShapeError("train: model shape does not match dataset (input dim " +
                     std::to_string(dataset.input_dim()) + ", classes " + std::to_string(n_classes) + ")");
  }
  if (snap.velocity.weights.size() != snap.params.layers.size()) {
    throw ShapeError("train: velocity does not match model");
  }

  const std::vector<std::size_t> train_rows = dataset.indices(Split::Train);
  const std::size_t per_epoch = (train_rows.size() + config.batch_size - 1) / config.batch_size;
  result.trace.reserve((config.epochs - std::min<std::size_t>(config.epochs, snap.epochs_completed)) * per_epoch);

  for (std::size_t epoch = snap.epochs_completed; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order = train_rows;
    auto rng = epoch_rng(config.seed, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = learning_rate_at(config, epoch);

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(stop));
      const std::uint64_t iteration = snap.curriculum.iteration_k + 1;
      try {
        const EmbedCache cache = forward_embed_cached(snap.params, dataset.gather(rows));
        CosineBatch batch{cosine_batch(cache.embeddings, snap.params.classifier), {}};
        batch.labels.reserve(rows.size());
        for (std::size_t r : rows) batch.labels.push_back(dataset.labels[r]);

        const double t_used = effective_t(config.variant, snap.curriculum.t);
        const LossOutput out = forward(batch, config.variant, t_used);
        const EmbeddingGradients eg = chain_to_embeddings(out.grad_cosines, cache.embeddings, snap.params.classifier);
        ModelTensors grads = backprop_embed(snap.params, cache, eg.features);
        grads.classifier = eg.classifier;
        sgd_step(snap.params, grads, snap.velocity, config, epoch, iteration);

        const double r = batch_statistic(batch, out.prob_gt, snap.curriculum.statistic_kind);
        snap.curriculum = update_t(snap.curriculum, r);
        result.trace.push_back({snap.curriculum.iteration_k, out.loss, snap.curriculum.t, r, out.hard_fraction,
                                out.m_min, out.m_max, lr});
      } catch (const NumericalError& e) {
        throw NumericalError("iteration " + std::to_string(iteration) + " (epoch " + std::to_string(epoch) +
                             "): " + e.what());
      }
    }
    snap.epochs_completed = epoch + 1;
  }
  return result;
}

double accuracy(const ModelParams& params, const LabeledDataset& dataset, Split split) {
  const std::vector<std::size_t> rows = dataset.indices(split);
  if (rows.empty()) return 0.0;
  const std::vector<std::size_t> pred = predict(params, dataset.gather(rows));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) correct += pred[i] == dataset.labels[rows[i]] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

namespace {

constexpr std::string_view kTraceHeader = "k,loss,t,r,hard_fraction,M_min,M_max,lr";

std::string real(double v) {
  char buf[64];
  return std::string(buf, std::to_chars(buf, buf + sizeof(buf), v).ptr);
}

}  // namespace

void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << kTraceHeader << '\n';
  for (const auto& rec : trace) {
    out << rec.k << ',' << real(rec.loss) << ',' << real(rec.t) << ',' << real(rec.r) << ','
        << real(rec.hard_fraction) << ',' << real(rec.m_min) << ',' << real(rec.m_max) << ','
        << real(rec.learning_rate) << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

TrainTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw ParseError("trace header mismatch", 1);
  TrainTrace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    TraceRecord rec;
    double* reals[] = {&rec.loss, &rec.t, &rec.r, &rec.hard_fraction, &rec.m_min, &rec.m_max, &rec.learning_rate};
    const char* p = line.data();
    const char* end = line.data() + line.size();
    auto res = std::from_chars(p, end, rec.k);
    bool ok = res.ec == std::errc();
    p = res.ptr;
    for (double* field : reals) {
      if (!ok || p == end || *p != ',') {
        ok = false;
        break;
      }
      res = std::from_chars(p + 1, end, *field);
      ok = res.ec == std::errc();
      p = res.ptr;
    }
    if (!ok || p != end) throw ParseError("malformed trace row at line " + std::to_string(line_no), line_no);
    trace.push_back(rec);
  }
  return trace;
}

}  // namespace cmgn
