// Experiment runner: run / validate / report.

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "cvarlearn/config.hpp"
#include "cvarlearn/errors.hpp"
#include "cvarlearn/experiment.hpp"
#include "cvarlearn/io.hpp"

namespace {

void print_reports(const std::vector<cvarlearn::BoundReport>& reports) {
  for (const auto& r : reports) {
    std::cerr << (r.pass ? "PASS " : "FAIL ") << r.name << ' ' << r.subject << ": empirical "
              << cvarlearn::format_real(r.empirical) << " vs " << cvarlearn::format_real(r.theoretical) << '\n';
  }
}

bool all_pass(const std::vector<cvarlearn::BoundReport>& reports) {
  for (const auto& r : reports) {
    if (!r.pass) return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-averse first-order learning experiments (CVaR games)"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::size_t workers = 0;
  bool strict = false;
  auto* run = app.add_subcommand("run", "Run all trials of an experiment and write its output bundle");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides the config's output)");
  run->add_option("--workers", workers, "Concurrent trials (overrides the config's workers)")->check(CLI::PositiveNumber);
  run->add_flag("--strict", strict, "Exit nonzero if any bound report fails");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config and print it with defaults resolved");
  validate->add_option("--config", validate_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  std::string bundle_dir;
  bool report_strict = false;
  auto* report = app.add_subcommand("report", "Recompute bound reports from a bundle's stored traces");
  report->add_option("--bundle", bundle_dir, "Output bundle directory")->required()->check(CLI::ExistingDirectory);
  report->add_flag("--strict", report_strict, "Exit nonzero if any bound report fails");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto config = cvarlearn::load_config(config_path);
      cvarlearn::ExperimentOptions options;
      if (!out_dir.empty()) options.output = out_dir;
      if (workers > 0) options.workers = workers;
      options.progress = &std::cerr;
      const auto bundle = cvarlearn::run_experiment(config, options);
      print_reports(bundle.reports);
      std::cerr << "bundle written to " << bundle.directory.string() << '\n';
      return strict && !bundle.all_bounds_pass() ? 3 : 0;
    }
    if (*validate) {
      const auto config = cvarlearn::load_config(validate_path);
      std::cout << cvarlearn::config_to_json(config).dump(2) << '\n';
      return 0;
    }
    if (*report) {
      const auto reports = cvarlearn::report_bundle(bundle_dir);
      print_reports(reports);
      return report_strict && !all_pass(reports) ? 3 : 0;
    }
  } catch (const cvarlearn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
