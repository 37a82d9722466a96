// Command-line front end: solve / certify / study / sweep-alpha over a
// key=value config file, with common knobs overridable from the command line.
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ocfem/runner.hpp"

namespace {

struct Overrides {
  std::optional<int> level;
  std::optional<std::string> levels;
  std::optional<int> ref;
  std::vector<double> alphas;
  std::optional<std::string> output;
};

void add_common(CLI::App* sub, std::string& config_path, Overrides& ov) {
  sub->add_option("--config", config_path, "configuration file")->required();
  sub->add_option("--output", ov.output, "output directory (overrides config)");
}

int run(ocfem::RunMode mode, const std::string& config_path, const Overrides& ov) {
  ocfem::RunConfig cfg = ocfem::parse_config(config_path);
  cfg.mode = mode;
  if (ov.level) cfg.level = *ov.level;
  if (ov.levels) {
    try {
      const auto [lo, hi] = ocfem::detail::parse_level_range(*ov.levels, 0);
      cfg.level_lo = lo;
      cfg.level_hi = hi;
    } catch (const ocfem::ConfigError&) {
      throw ocfem::ConfigError("--levels expects a range 'A..B'");
    }
  }
  if (ov.ref) cfg.reference_level = *ov.ref;
  if (!ov.alphas.empty()) cfg.alphas = ov.alphas;
  if (ov.output) cfg.output_dir = *ov.output;

  const std::vector<std::string> files = ocfem::execute_run(cfg);
  for (const std::string& f : files)
    std::printf("wrote %s/%s\n", cfg.output_dir.c_str(), f.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"P1 finite element solver for state-constrained semilinear optimal control"};
  app.require_subcommand(1);

  std::string cfg_solve, cfg_certify, cfg_study, cfg_sweep;
  Overrides ov_solve, ov_certify, ov_study, ov_sweep;

  CLI::App* solve = app.add_subcommand("solve", "solve the KKT system and dump all fields");
  add_common(solve, cfg_solve, ov_solve);
  solve->add_option("--level", ov_solve.level, "mesh level (n = 2^level)");

  CLI::App* certify = app.add_subcommand("certify", "solve and emit the certificate line only");
  add_common(certify, cfg_certify, ov_certify);
  certify->add_option("--level", ov_certify.level, "mesh level (n = 2^level)");

  CLI::App* study = app.add_subcommand("study", "convergence study with EOC table");
  add_common(study, cfg_study, ov_study);
  study->add_option("--levels", ov_study.levels, "level range A..B");
  study->add_option("--ref", ov_study.ref, "reference level");

  CLI::App* sweep = app.add_subcommand("sweep-alpha", "certificate comparison over alpha values");
  add_common(sweep, cfg_sweep, ov_sweep);
  sweep->add_option("--level", ov_sweep.level, "mesh level (n = 2^level)");
  sweep->add_option("--alphas", ov_sweep.alphas, "comma-separated alpha list")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return run(ocfem::RunMode::solve, cfg_solve, ov_solve);
    if (certify->parsed()) return run(ocfem::RunMode::certify, cfg_certify, ov_certify);
    if (study->parsed()) return run(ocfem::RunMode::study, cfg_study, ov_study);
    return run(ocfem::RunMode::alpha_sweep, cfg_sweep, ov_sweep);
  } catch (const ocfem::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const ocfem::InvalidArgument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const ocfem::Error& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
