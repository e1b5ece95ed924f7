#pragma once

// Runs a configuration once per seed and writes, under <root>/seed_<n>/:
//
//   metrics.csv     one row per generation (docs/CONFIG.md lists the columns)
//   learners.csv    per-learner TD3 statistics per generation
//   manager.csv     per-learner value, normalized value, count, UCB, workers
//   evolution.csv   fitness summary, elites and mutation counts
//   allocation.csv  cumulative rollout share per learner
//   timings.csv     wall-clock seconds per generation (not deterministic)
//   config.toml     resolved config restricted to this seed
//   checkpoints/    final champion and learner networks
//
// The root is $CERL_OUTPUT_ROOT when set, else cfg.output_dir.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "cerl/config.hpp"
#include "cerl/orchestrator.hpp"

namespace cerl {

inline constexpr const char* kOutputRootVar = "CERL_OUTPUT_ROOT";

std::filesystem::path output_root(const RunConfig& cfg);

struct SeedRecord {
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  std::vector<GenerationMetrics> generations;
  std::vector<double> wall_seconds;  // per generation
  std::vector<std::uint64_t> cumulative_allocation;
  bool stopped_early = false;
};

struct RunRecord {
  RunConfig config;
  std::filesystem::path root;
  std::vector<SeedRecord> seeds;
};

struct ExperimentHooks {
  /// Called after every generation; returning true ends that seed's run.
  std::function<bool(std::uint64_t seed, const GenerationMetrics&)> after_generation;
  /// Keep GenerationMetrics in memory (the CSV files are always written).
  bool keep_metrics = true;
};

/// One seed into `dir`. Partially written output is removed if anything throws.
SeedRecord run_seed(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir,
                    const ExperimentHooks& hooks = {});

/// Every seed of cfg in turn, below output_root(cfg).
RunRecord run_experiment(const RunConfig& cfg, const ExperimentHooks& hooks = {});

/// Column names of metrics.csv, in order.
const std::vector<std::string>& metrics_columns();

}  // namespace cerl
