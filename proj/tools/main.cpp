#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cli/commands.hpp"

int main(int argc, char** argv) {
  namespace cli = cmgn::cli;
  CLI::App app{"cmgn: curriculum margin losses, training and evaluation on synthetic data"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string out_path;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic hypersphere dataset as CSV");
  gen->add_option("--spec", spec_path, "Synthetic spec or experiment config (JSON)")->required();
  gen->add_option("--out", out_path, "Output CSV")->required();

  std::string config_path;
  std::string data_path;
  std::string out_dir;
  auto* trn = app.add_subcommand("train", "Train one experiment; writes checkpoint, trace and metrics");
  trn->add_option("--config", config_path, "Experiment config (JSON)")->required();
  trn->add_option("--data", data_path, "Dataset CSV")->required();
  trn->add_option("--out-dir", out_dir, "Output directory")->required();

  std::vector<std::string> configs;
  auto* cmp = app.add_subcommand("compare", "Train several configs and tabulate verification accuracy");
  cmp->add_option("--configs", configs, "Experiment configs (JSON)")->required();
  cmp->add_option("--data", data_path, "Dataset CSV")->required();
  cmp->add_option("--out", out_path, "Output CSV")->required();

  std::string variant;
  std::vector<double> t_values;
  auto* trc = app.add_subcommand("trace", "Tabulate hard-branch modulation curves I and N");
  trc->add_option("--variant", variant, "Loss variant")->required();
  trc->add_option("--t-values", t_values, "Values of t")->required()->delimiter(',');
  trc->add_option("--out", out_path, "Output CSV")->required();

  std::size_t trials = 100;
  std::uint64_t seed = 1;
  auto* gc = app.add_subcommand("grad-check", "Compare analytic gradients with finite differences");
  gc->add_option("--variant", variant, "Loss variant")->required();
  gc->add_option("--trials", trials, "Random batches")->default_val(100);
  gc->add_option("--seed", seed, "RNG seed")->default_val(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kValidationError;
  }

  if (*gen) return cli::cmd_gen_data(spec_path, out_path, std::cout, std::cerr);
  if (*trn) return cli::cmd_train(config_path, data_path, out_dir, std::cout, std::cerr);
  if (*cmp) {
    std::vector<std::filesystem::path> paths(configs.begin(), configs.end());
    return cli::cmd_compare(paths, data_path, out_path, std::cout, std::cerr);
  }
  if (*trc) return cli::cmd_trace(variant, t_values, out_path, std::cout, std::cerr);
  if (*gc) return cli::cmd_grad_check(variant, trials, seed, std::cout, std::cerr);
  return cli::kValidationError;
}
