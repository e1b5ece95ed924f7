// cerl: run, plot and validate experiments.
//
//   cerl run --config exp.toml [--seed N] [--workers W] [--quiet]
//   cerl plot runs/a runs/b [--metric champion_normalized] [--out curves.svg]
//   cerl validate --config exp.toml
//
// Output goes under $CERL_OUTPUT_ROOT if set, else the config's run.output_dir.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cerl/config.hpp"
#include "cerl/error.hpp"
#include "cerl/experiment.hpp"
#include "cerl/plot.hpp"

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::size_t> workers, bool quiet) {
  cerl::RunConfig cfg = cerl::load_config(config_path);
  if (seed) cfg.seeds = {*seed};
  if (workers) cfg.workers = *workers;
  cerl::validate(cfg);

  cerl::ExperimentHooks hooks;
  hooks.keep_metrics = false;
  hooks.after_generation = [quiet](std::uint64_t s, const cerl::GenerationMetrics& m) {
    if (!quiet) {
      std::fprintf(stderr, "seed %llu gen %llu steps %llu best %.3f",
                   static_cast<unsigned long long>(s), static_cast<unsigned long long>(m.generation),
                   static_cast<unsigned long long>(m.total_steps), m.best_fitness);
      if (m.champion) std::fprintf(stderr, " champion %.3f", m.champion->mean_return);
      if (m.champion && m.champion->normalized) std::fprintf(stderr, " (%.3f)", *m.champion->normalized);
      std::fputc('\n', stderr);
    }
    return false;
  };
  const cerl::RunRecord rec = cerl::run_experiment(cfg, hooks);
  std::cout << "wrote " << rec.seeds.size() << " seed run(s) under " << rec.root.string() << "\n";
  return 0;
}

int cmd_plot(const std::vector<std::string>& dirs, const std::string& metric,
             const std::string& out_path) {
  std::vector<cerl::plot::Curve> curves;
  for (const auto& d : dirs) curves.push_back(cerl::plot::load_curve(d, metric));
  const std::string svg = cerl::plot::render_svg(curves, metric + " vs environment steps",
                                                 "environment steps", metric);
  std::ofstream out(out_path);
  out << svg;
  out.close();
  if (!out) throw cerl::Error("cannot write " + out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_validate(const std::string& config_path) {
  const cerl::RunConfig cfg = cerl::load_config(config_path);
  std::cout << "ok: " << cfg.env << ", " << cfg.algorithm << ", " << cfg.portfolio_size()
            << " learner(s), population " << (cfg.algorithm == "cerl" ? cfg.population_size : 0)
            << ", " << cfg.seeds.size() << " seed(s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Population plus learner-portfolio RL experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "run every seed of a configuration");
  run->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "run only this seed");
  run->add_option("--workers", workers, "rollout/gradient threads")->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "no per-generation progress");

  std::vector<std::string> dirs;
  std::string metric = "champion_return";
  std::string out_path = "curves.svg";
  auto* plot = app.add_subcommand("plot", "render mean and 95% band per run directory as SVG");
  plot->add_option("dirs", dirs, "run directories")->required()->check(CLI::ExistingDirectory);
  plot->add_option("--metric", metric, "metrics.csv column on the y axis");
  plot->add_option("--out", out_path, "output SVG path");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "parse and check a config file");
  validate->add_option("--config", validate_path, "config file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, seed, workers, quiet);
    if (*plot) return cmd_plot(dirs, metric, out_path);
    if (*validate) return cmd_validate(validate_path);
  } catch (const cerl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
