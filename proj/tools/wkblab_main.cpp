#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "wkblab/cli.hpp"
#include "wkblab/errors.hpp"

namespace {

enum Exit { kPass = 0, kFail = 1, kUsage = 2, kRefused = 3 };

}  // namespace

int main(int argc, char** argv) {
  using namespace wkblab;
  CLI::App app{"wkblab: semiclassical dispersion and Strichartz experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> budget;

  auto* run = app.add_subcommand("run", "run the experiment named in a config file");
  run->add_option("--config", config_path, "config file (key = value sections)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory for CSV and JSON");
  run->add_option("--seed", seed, "seed for random trial data");
  run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--budget", budget, "quadrature node budget")->check(CLI::PositiveNumber);

  auto* list = app.add_subcommand("list", "list experiments");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate-config", "check a config file without running it");
  validate->add_option("--config", validate_path, "config file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  if (*list) {
    for (const auto& e : cli::experiments()) std::printf("%-16s %s\n", e.name.c_str(), e.summary.c_str());
    return kPass;
  }

  try {
    if (*validate) {
      cli::validate(cli::ExperimentConfig::load(validate_path));
      std::printf("ok\n");
      return kPass;
    }
    cli::ExperimentConfig config = cli::ExperimentConfig::load(config_path);
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    if (budget) config.budget = *budget;
    if (!out_dir.empty()) config.output = out_dir;

    const cli::RunReport report = cli::run(config);
    cli::emit(report, config.output);
    for (const auto& c : report.criteria)
      std::printf("%s  %-26s value %-12s expected %s (tol %s)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                  cli::format_number(c.value).c_str(), cli::format_number(c.expected).c_str(),
                  cli::format_number(c.tolerance).c_str());
    for (const auto& [k, v] : report.facts) std::printf("      %s: %s\n", k.c_str(), v.c_str());
    std::printf("%s in %.1f s, outputs in %s\n", report.experiment.c_str(), report.wall_seconds, config.output.c_str());
    return report.pass() ? kPass : kFail;
  } catch (const ResolutionRefused& e) {
    std::fprintf(stderr, "resolution refused: %s (needs %.3g nodes, budget %.3g)\n", e.what(), e.required_nodes(),
                 e.budget());
    return kRefused;
  } catch (const cli::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
}
