#include "cli/experiment_config.hpp"

#include <fstream>
#include <set>

#include "cmgn/error.hpp"

namespace cmgn::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + ": expected a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + "." + key + ": " + e.what());
  }
}

void read_unsigned(const json& obj, const char* key, std::size_t& out, const std::string& where) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ValidationError(where + "." + key + ": expected a non-negative integer");
  }
  out = v.get<std::size_t>();
}

void read_seed(const json& obj, const char* key, std::uint64_t& out, const std::string& where) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ValidationError(where + "." + key + ": expected a non-negative integer");
  }
  out = v.get<std::uint64_t>();
}

}  // namespace

SyntheticSpec parse_synthetic_spec(const json& doc) {
  const std::string where = "data";
  reject_unknown(doc, {"num_classes", "input_dim", "samples_per_class", "noise_sigma", "seed", "holdout_fraction"},
                 where);
  SyntheticSpec s;
  read_unsigned(doc, "num_classes", s.num_classes, where);
  read_unsigned(doc, "input_dim", s.input_dim, where);
  read_unsigned(doc, "samples_per_class", s.samples_per_class, where);
  read(doc, "noise_sigma", s.noise_sigma, where);
  read_seed(doc, "seed", s.seed, where);
  read(doc, "holdout_fraction", s.holdout_fraction, where);
  s.validate();
  return s;
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.train.learning_rate = 0.1;
  c.train.momentum = 0.9;
  c.train.weight_decay = 5e-4;
  c.train.lr_decay_epochs = {18, 24, 28};
  c.train.lr_decay_factor = 0.1;
  c.train.epochs = 30;
  c.train.batch_size = 64;
  c.train.seed = 1;
  c.train.variant = LossVariant::curricular_face(0.5, 64.0);
  c.train.model.hidden_dims = {64};
  c.train.model.embedding_dim = 16;
  return c;
}

void ExperimentConfig::validate() const {
  data.validate();
  train.validate();
  for (double f : eval.far_targets) {
    if (!(f > 0.0 && f <= 1.0)) throw ValidationError("eval.far_targets entries must lie in (0, 1]");
  }
  if (eval.pairs_per_polarity == 0) throw ValidationError("eval.pairs_per_polarity must be >= 1");
  for (const std::string* p : {&output.checkpoint, &output.trace, &output.metrics}) {
    if (p->empty()) throw ValidationError("output paths must be non-empty");
  }
}

ExperimentConfig parse_experiment_config(const json& doc) {
  reject_unknown(doc, {"name", "data", "model", "loss", "curriculum", "train", "eval", "output"}, "config");
  ExperimentConfig c = default_experiment_config();
  read(doc, "name", c.name, "config");
  if (doc.contains("data")) c.data = parse_synthetic_spec(doc.at("data"));

  if (doc.contains("model")) {
    const json& m = doc.at("model");
    reject_unknown(m, {"hidden_dims", "embedding_dim"}, "model");
    read(m, "hidden_dims", c.train.model.hidden_dims, "model");
    read_unsigned(m, "embedding_dim", c.train.model.embedding_dim, "model");
  }

  if (doc.contains("loss")) {
    const json& l = doc.at("loss");
    reject_unknown(l, {"variant", "margin", "scale", "fixed_t", "margin_fallback"}, "loss");
    std::string variant(to_string(c.train.variant.kind));
    read(l, "variant", variant, "loss");
    c.train.variant.kind = parse_loss_kind(variant);
    read(l, "margin", c.train.variant.margin, "loss");
    read(l, "scale", c.train.variant.scale, "loss");
    read(l, "margin_fallback", c.train.variant.margin_fallback, "loss");
    if (l.contains("fixed_t") && !l.at("fixed_t").is_null()) {
      double t = 0.0;
      read(l, "fixed_t", t, "loss");
      c.train.variant.fixed_t = t;
    } else if (l.contains("fixed_t")) {
      c.train.variant.fixed_t.reset();
    }
  }

  if (doc.contains("curriculum")) {
    const json& cu = doc.at("curriculum");
    reject_unknown(cu, {"statistic", "momentum", "placement"}, "curriculum");
    std::string stat(to_string(c.train.statistic_kind));
    std::string placement(to_string(c.train.momentum_placement));
    read(cu, "statistic", stat, "curriculum");
    read(cu, "momentum", c.train.curriculum_momentum, "curriculum");
    read(cu, "placement", placement, "curriculum");
    c.train.statistic_kind = parse_statistic_kind(stat);
    c.train.momentum_placement = parse_momentum_placement(placement);
  }

  if (doc.contains("train")) {
    const json& t = doc.at("train");
    reject_unknown(t, {"learning_rate", "momentum", "weight_decay", "lr_decay_epochs", "lr_decay_factor", "epochs",
                       "batch_size", "seed"},
                   "train");
    read(t, "learning_rate", c.train.learning_rate, "train");
    read(t, "momentum", c.train.momentum, "train");
    read(t, "weight_decay", c.train.weight_decay, "train");
    read(t, "lr_decay_epochs", c.train.lr_decay_epochs, "train");
    read(t, "lr_decay_factor", c.train.lr_decay_factor, "train");
    read_unsigned(t, "epochs", c.train.epochs, "train");
    read_unsigned(t, "batch_size", c.train.batch_size, "train");
    read_seed(t, "seed", c.train.seed, "train");
  }

  if (doc.contains("eval")) {
    const json& e = doc.at("eval");
    reject_unknown(e, {"pairs_per_polarity", "pair_seed", "far_targets"}, "eval");
    read_unsigned(e, "pairs_per_polarity", c.eval.pairs_per_polarity, "eval");
    read_seed(e, "pair_seed", c.eval.pair_seed, "eval");
    read(e, "far_targets", c.eval.far_targets, "eval");
  }

  if (doc.contains("output")) {
    const json& o = doc.at("output");
    reject_unknown(o, {"checkpoint", "trace", "metrics"}, "output");
    read(o, "checkpoint", c.output.checkpoint, "output");
    read(o, "trace", c.output.trace, "output");
    read(o, "metrics", c.output.metrics, "output");
  }

  c.validate();
  return c;
}

json load_config_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config '" + path.string() + "': " + e.what(), e.byte);
  }
  if (doc.is_object() && doc.contains("extends")) {
    const json ext = doc.at("extends");
    if (!ext.is_string()) throw ValidationError("config '" + path.string() + "': extends must be a path string");
    json base = load_config_document(path.parent_path() / ext.get<std::string>());
    doc.erase("extends");
    base.merge_patch(doc);
    return base;
  }
  return doc;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  json doc = load_config_document(path);
  if (doc.is_object() && !doc.contains("name")) doc["name"] = path.stem().string();
  return parse_experiment_config(doc);
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  const json doc = load_config_document(path);
  if (doc.is_object() && doc.contains("data")) return load_experiment_config(path).data;
  return parse_synthetic_spec(doc);
}

json to_json(const ExperimentConfig& c) {
  json loss = {{"variant", std::string(to_string(c.train.variant.kind))},
               {"margin", c.train.variant.margin},
               {"scale", c.train.variant.scale},
               {"fixed_t", nullptr},
               {"margin_fallback", c.train.variant.margin_fallback}};
  if (c.train.variant.fixed_t) loss["fixed_t"] = *c.train.variant.fixed_t;
  return {
      {"name", c.name},
      {"data",
       {{"num_classes", c.data.num_classes},
        {"input_dim", c.data.input_dim},
        {"samples_per_class", c.data.samples_per_class},
        {"noise_sigma", c.data.noise_sigma},
        {"seed", c.data.seed},
        {"holdout_fraction", c.data.holdout_fraction}}},
      {"model", {{"hidden_dims", c.train.model.hidden_dims}, {"embedding_dim", c.train.model.embedding_dim}}},
      {"loss", loss},
      {"curriculum",
       {{"statistic", std::string(to_string(c.train.statistic_kind))},
        {"momentum", c.train.curriculum_momentum},
        {"placement", std::string(to_string(c.train.momentum_placement))}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"momentum", c.train.momentum},
        {"weight_decay", c.train.weight_decay},
        {"lr_decay_epochs", c.train.lr_decay_epochs},
        {"lr_decay_factor", c.train.lr_decay_factor},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"seed", c.train.seed}}},
      {"eval",
       {{"pairs_per_polarity", c.eval.pairs_per_polarity},
        {"pair_seed", c.eval.pair_seed},
        {"far_targets", c.eval.far_targets}}},
      {"output", {{"checkpoint", c.output.checkpoint}, {"trace", c.output.trace}, {"metrics", c.output.metrics}}},
  };
}

}  // namespace cmgn::cli
