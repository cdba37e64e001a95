#include "cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>

#include "cmgn/checkpoint.hpp"
#include "cmgn/error.hpp"
#include "cmgn/oracle/grad_check.hpp"

namespace cmgn::cli {

using nlohmann::json;

int report_exception(std::ostream& err) {
  try {
    throw;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }
}

namespace {

std::string real(double v) {
  char buf[64];
  return std::string(buf, std::to_chars(buf, buf + sizeof(buf), v).ptr);
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = m.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

void check_dataset_matches(const ExperimentConfig& config, const LabeledDataset& dataset) {
  if (dataset.input_dim() != config.data.input_dim) {
    throw ValidationError("data has input dim " + std::to_string(dataset.input_dim()) + " but config '" +
                          config.name + "' expects " + std::to_string(config.data.input_dim));
  }
  if (dataset.num_classes() != config.data.num_classes) {
    throw ValidationError("data has " + std::to_string(dataset.num_classes()) + " classes but config '" +
                          config.name + "' expects " + std::to_string(config.data.num_classes));
  }
  dataset.validate(config.data.num_classes);
}

json report_json(const VerificationReport& rep) {
  json tar = json::array();
  for (const auto& e : rep.tar_at_far) {
    tar.push_back({{"far_target", e.far_target}, {"tar", e.tar}, {"far", e.far}, {"threshold", e.threshold}});
  }
  return {{"best_accuracy", rep.best_accuracy}, {"best_threshold", rep.best_threshold}, {"tar_at_far", tar}};
}

std::string t_mode_label(const LossVariant& v) {
  if (v.fixed_t) return real(*v.fixed_t);
  return v.kind == LossKind::CurricularFace ? "adaptive" : "n/a";
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config, const LabeledDataset& dataset) {
  config.validate();
  check_dataset_matches(config, dataset);

  ExperimentOutcome out;
  out.result = train(config.train, dataset);
  const ModelParams& params = out.result.snapshot.params;
  out.train_accuracy = accuracy(params, dataset, Split::Train);
  out.holdout_accuracy = accuracy(params, dataset, Split::Holdout);

  const Matrix embeddings = forward_embed(params, dataset.inputs);
  const VerificationPairs pairs = make_pairs(dataset, config.eval.pairs_per_polarity, config.eval.pair_seed);
  out.verification = verification_report(embeddings, pairs, config.eval.far_targets);

  const auto train_rows = dataset.indices(Split::Train);
  const auto holdout_rows = dataset.indices(Split::Holdout);
  std::vector<std::size_t> gallery_labels;
  std::vector<std::size_t> probe_labels;
  for (std::size_t r : train_rows) gallery_labels.push_back(dataset.labels[r]);
  for (std::size_t r : holdout_rows) probe_labels.push_back(dataset.labels[r]);
  out.rank1 = rank1_identification(gather_rows(embeddings, holdout_rows), gather_rows(embeddings, train_rows),
                                   probe_labels, gallery_labels);

  const TrainTrace& trace = out.result.trace;
  out.metrics = {
      {"name", config.name},
      {"variant", std::string(to_string(config.train.variant.kind))},
      {"iterations", trace.size()},
      {"final_loss", trace.empty() ? 0.0 : trace.back().loss},
      {"final_t", out.result.snapshot.curriculum.t},
      {"train_accuracy", out.train_accuracy},
      {"holdout_accuracy", out.holdout_accuracy},
      {"rank1_identification", out.rank1},
      {"verification", report_json(out.verification)},
  };
  return out;
}

std::vector<CompareRow> compare_experiments(const std::vector<ExperimentConfig>& configs,
                                            const LabeledDataset& dataset, unsigned threads) {
  const auto run_one = [&dataset](const ExperimentConfig& cfg) {
    CompareRow row;
    row.name = cfg.name;
    row.variant = std::string(to_string(cfg.train.variant.kind));
    row.t_mode = t_mode_label(cfg.train.variant);
    row.statistic = std::string(to_string(cfg.train.statistic_kind));
    try {
      const ExperimentOutcome o = run_experiment(cfg, dataset);
      row.verification_accuracy = o.verification.best_accuracy;
      row.best_threshold = o.verification.best_threshold;
      row.train_accuracy = o.train_accuracy;
      row.final_loss = o.result.trace.empty() ? 0.0 : o.result.trace.back().loss;
      row.final_t = o.result.snapshot.curriculum.t;
    } catch (const std::exception& e) {
      row.status = std::string("failed: ") + e.what();
    }
    return row;
  };

  std::vector<CompareRow> rows(configs.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) rows[i] = run_one(configs[i]);
    return rows;
  }
  for (std::size_t start = 0; start < configs.size(); start += threads) {
    const std::size_t stop = std::min<std::size_t>(configs.size(), start + threads);
    std::vector<std::future<CompareRow>> jobs;
    for (std::size_t i = start; i < stop; ++i) {
      jobs.push_back(std::async(std::launch::async, run_one, std::cref(configs[i])));
    }
    for (std::size_t i = start; i < stop; ++i) rows[i] = jobs[i - start].get();
  }
  return rows;
}

void write_compare_csv(const std::vector<CompareRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "name,variant,t,statistic,verification_accuracy,best_threshold,train_accuracy,final_loss,final_t,status\n";
  for (const auto& r : rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << r.name << ',' << r.variant << ',' << r.t_mode << ',' << r.statistic << ','
        << real(r.verification_accuracy) << ',' << real(r.best_threshold) << ',' << real(r.train_accuracy) << ','
        << real(r.final_loss) << ',' << real(r.final_t) << ',' << status << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

unsigned threads_from_env() {
  const char* v = std::getenv("CMGN_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  unsigned n = 0;
  const auto res = std::from_chars(v, v + std::char_traits<char>::length(v), n);
  if (res.ec != std::errc()) throw ValidationError("CMGN_THREADS must be a non-negative integer");
  return n;
}

int cmd_gen_data(const std::filesystem::path& spec_path, const std::filesystem::path& out_path, std::ostream& os,
                 std::ostream& err) {
  try {
    const SyntheticSpec spec = load_synthetic_spec(spec_path);
    const LabeledDataset ds = generate(spec);
    save_csv(ds, out_path);
    os << "wrote " << out_path.string() << ": N=" << ds.size() << " classes=" << spec.num_classes
       << " dim=" << spec.input_dim << " train=" << ds.indices(Split::Train).size()
       << " holdout=" << ds.indices(Split::Holdout).size() << '\n';
    return kOk;
  } catch (...) {
    return report_exception(err);
  }
}

int cmd_train(const std::filesystem::path& config_path, const std::filesystem::path& data,
              const std::filesystem::path& out_dir, std::ostream& os, std::ostream& err) {
  try {
    const ExperimentConfig config = load_experiment_config(config_path);
    const LabeledDataset ds = load_csv(data);
    const ExperimentOutcome outcome = run_experiment(config, ds);

    std::filesystem::create_directories(out_dir);
    save_checkpoint(outcome.result.snapshot, out_dir / config.output.checkpoint);
    write_trace_csv(outcome.result.trace, out_dir / config.output.trace);
    {
      std::ofstream m(out_dir / config.output.metrics);
      if (!m) throw IoError("cannot write metrics to '" + (out_dir / config.output.metrics).string() + "'");
      json metrics = outcome.metrics;
      metrics["config"] = to_json(config);
      m << metrics.dump(2) << '\n';
    }
    os << config.name << ": " << outcome.result.trace.size() << " iterations, final loss "
       << (outcome.result.trace.empty() ? 0.0 : outcome.result.trace.back().loss) << ", t "
       << outcome.result.snapshot.curriculum.t << ", train acc " << outcome.train_accuracy
       << ", verification acc " << outcome.verification.best_accuracy << '\n';
    return kOk;
  } catch (...) {
    return report_exception(err);
  }
}

int cmd_compare(const std::vector<std::filesystem::path>& config_paths, const std::filesystem::path& data,
                const std::filesystem::path& out, std::ostream& os, std::ostream& err) {
  try {
    if (config_paths.empty()) throw ValidationError("compare: no configs given");
    std::vector<ExperimentConfig> configs;
    for (const auto& p : config_paths) configs.push_back(load_experiment_config(p));
    const LabeledDataset ds = load_csv(data);
    const std::vector<CompareRow> rows = compare_experiments(configs, ds, threads_from_env());
    write_compare_csv(rows, out);
    bool all_ok = true;
    for (const auto& r : rows) {
      os << r.name << "  " << r.variant << "  t=" << r.t_mode << "  stat=" << r.statistic
         << "  verification=" << r.verification_accuracy << "  " << r.status << '\n';
      all_ok = all_ok && r.status == "ok";
    }
    if (!all_ok) {
      err << "compare: at least one sub-run failed; see status column\n";
      return kNumericalFailure;
    }
    return kOk;
  } catch (...) {
    return report_exception(err);
  }
}

int cmd_trace(const std::string& variant_name, const std::vector<double>& t_values,
              const std::filesystem::path& out, std::ostream& os, std::ostream& err) {
  try {
    LossVariant variant;
    variant.kind = parse_loss_kind(variant_name);
    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(-1.0 + 0.01 * i);
    grid.back() = 1.0;
    const auto rows = modulation_curves(variant, t_values, grid);
    write_curves_csv(rows, out);
    os << "wrote " << rows.size() << " rows to " << out.string() << '\n';
    return kOk;
  } catch (...) {
    return report_exception(err);
  }
}

int cmd_grad_check(const std::string& variant_name, std::size_t trials, std::uint64_t seed, std::ostream& os,
                   std::ostream& err) {
  try {
    oracle::GradCheckOptions opts;
    opts.kind = parse_loss_kind(variant_name);
    opts.trials = trials;
    opts.seed = seed;
    if (trials == 0) {
      err << "warning: --trials 0, nothing checked\n";
      os << to_string(opts.kind) << ": vacuous pass (0 trials)\n";
      return kOk;
    }
    const oracle::GradCheckReport rep = oracle::run_grad_check(opts);
    os << to_string(opts.kind) << ": " << rep.checks << " checks, " << rep.compared << " coordinates, skipped "
       << rep.skipped_flip << " (branch flip) + " << rep.skipped_band << " (boundary band), max relative error "
       << rep.max_rel_error << '\n';
    if (!rep.passed(kGradCheckTolerance)) {
      err << "gradient check failed: max relative error " << rep.max_rel_error << " > " << kGradCheckTolerance
          << " at trial " << rep.worst_trial << ", scale " << rep.worst_scale << ", coordinate "
          << rep.worst_coordinate << " (analytic " << rep.worst_analytic << ", numeric " << rep.worst_numeric
          << ")\n";
      return kNumericalFailure;
    }
    return kOk;
  } catch (...) {
    return report_exception(err);
  }
}

}  // namespace cmgn::cli
