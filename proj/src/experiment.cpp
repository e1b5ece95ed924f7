#include "cerl/experiment.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <string>

#include "cerl/error.hpp"
#include "cerl/serialize.hpp"

namespace cerl {

namespace fs = std::filesystem;

namespace {

std::string real(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

template <typename T>
std::string joined(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ";" : "") + std::to_string(xs[i]);
  return s;
}

class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
    check();
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    check();
  }

  void close() {
    out_.close();
    if (out_.fail()) throw Error("write failed: " + path_.string());
  }

 private:
  void check() {
    if (!out_) throw Error("write failed: " + path_.string());
  }

  fs::path path_;
  std::ofstream out_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  out.close();
  if (!out) throw Error("write failed: " + path.string());
}

SeedRecord run_seed_unguarded(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir,
                              const ExperimentHooks& hooks) {
  RunConfig snapshot = cfg;
  snapshot.seeds = {seed};
  fs::create_directories(dir / "checkpoints");
  write_text(dir / "config.toml", to_config_text(snapshot));

  CerlState state(snapshot, seed);
  const std::size_t q = state.portfolio.size();

  CsvFile metrics(dir / "metrics.csv", metrics_columns());
  CsvFile learners(dir / "learners.csv", {"generation", "learner", "gamma", "count", "value",
                                          "critic_loss", "actor_updates"});
  CsvFile manager(dir / "manager.csv", {"generation", "learner", "value", "normalized_value",
                                        "count", "ucb", "allocated"});
  CsvFile evolution(dir / "evolution.csv", {"generation", "best_fitness", "mean_fitness",
                                            "min_fitness", "elites", "mut_super", "mut_reset",
                                            "mut_ordinary", "transferred"});
  CsvFile timings(dir / "timings.csv", {"generation", "seconds"});

  SeedRecord rec;
  rec.seed = seed;
  rec.dir = dir;
  while (state.total_env_steps < snapshot.max_env_steps) {
    const auto t0 = std::chrono::steady_clock::now();
    GenerationMetrics m = run_generation(state);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string gen = std::to_string(m.generation);
    metrics.row({gen, std::to_string(m.total_steps), std::to_string(m.generation_steps),
                 std::to_string(m.ups), std::to_string(m.buffer_size), real(m.best_fitness),
                 real(m.mean_fitness), real(m.min_fitness),
                 m.champion ? real(m.champion->mean_return) : "",
                 m.champion && m.champion->normalized ? real(*m.champion->normalized) : ""});
    for (std::size_t l = 0; l < q; ++l) {
      const LearnerMetrics& lm = m.learners[l];
      const std::string idx = std::to_string(l);
      learners.row({gen, idx, real(lm.gamma), std::to_string(lm.count), real(lm.value),
                    real(lm.critic_loss), std::to_string(lm.actor_updates)});
      manager.row({gen, idx, real(lm.value), real(lm.normalized_value), std::to_string(lm.count),
                   real(lm.ucb), std::to_string(lm.allocated)});
    }
    if (state.population) {
      evolution.row({gen, real(m.best_fitness), real(m.mean_fitness), real(m.min_fitness),
                     joined(m.elites), std::to_string(m.mutations.super),
                     std::to_string(m.mutations.reset), std::to_string(m.mutations.ordinary),
                     joined(m.transferred)});
    }
    timings.row({gen, real(secs)});
    rec.wall_seconds.push_back(secs);

    const bool stop = hooks.after_generation && hooks.after_generation(seed, m);
    if (hooks.keep_metrics) rec.generations.push_back(std::move(m));
    if (stop) {
      rec.stopped_early = true;
      break;
    }
  }
  metrics.close();
  learners.close();
  manager.close();
  evolution.close();
  timings.close();

  rec.cumulative_allocation = state.cumulative_allocation;
  std::uint64_t total = 0;
  for (auto c : state.cumulative_allocation) total += c;
  CsvFile alloc(dir / "allocation.csv", {"learner", "gamma", "rollouts", "rate"});
  for (std::size_t l = 0; l < q; ++l) {
    const double rate = total ? static_cast<double>(state.cumulative_allocation[l]) /
                                    static_cast<double>(total)
                              : 0.0;
    alloc.row({std::to_string(l), real(state.portfolio[l].gamma),
               std::to_string(state.cumulative_allocation[l]), real(rate)});
  }
  alloc.close();

  const fs::path ck = dir / "checkpoints";
  save_mlp(ck / "champion.mlp", state.champion);
  for (std::size_t l = 0; l < q; ++l) {
    const std::string p = "learner_" + std::to_string(l);
    save_mlp(ck / (p + "_actor.mlp"), state.portfolio[l].actor);
    save_mlp(ck / (p + "_critic_a.mlp"), state.portfolio[l].critic_a);
    save_mlp(ck / (p + "_critic_b.mlp"), state.portfolio[l].critic_b);
  }
  if (snapshot.replay_snapshot) save_replay(dir / "replay.bin", state.buffer);
  if (snapshot.trajectory_dump) {
    auto env = state.env->clone();
    Rng rng = make_stream(seed, 4);
    write_trajectory_csv(dir / "trajectory.csv", state.champion, env->spec().bounds, *env, rng);
  }
  return rec;
}

}  // namespace

fs::path output_root(const RunConfig& cfg) {
  if (const char* env = std::getenv(kOutputRootVar); env && *env) return fs::path(env);
  return fs::path(cfg.output_dir);
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols{
      "generation",   "total_steps",  "generation_steps", "ups",
      "buffer_size",  "best_fitness", "mean_fitness",     "min_fitness",
      "champion_return", "champion_normalized"};
  return cols;
}

SeedRecord run_seed(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir,
                    const ExperimentHooks& hooks) {
  validate(cfg);
  const bool existed = fs::exists(dir);
  try {
    return run_seed_unguarded(cfg, seed, dir, hooks);
  } catch (...) {
    std::error_code ec;
    if (existed) {
      for (const char* name : {"metrics.csv", "learners.csv", "manager.csv", "evolution.csv",
                               "allocation.csv", "timings.csv", "config.toml", "replay.bin",
                               "trajectory.csv"}) {
        fs::remove(dir / name, ec);
      }
      fs::remove_all(dir / "checkpoints", ec);
    } else {
      fs::remove_all(dir, ec);
    }
    throw;
  }
}

RunRecord run_experiment(const RunConfig& cfg, const ExperimentHooks& hooks) {
  validate(cfg);
  RunRecord run;
  run.config = cfg;
  run.root = output_root(cfg);
  fs::create_directories(run.root);
  write_text(run.root / "config.toml", to_config_text(cfg));
  for (std::uint64_t seed : cfg.seeds) {
    run.seeds.push_back(run_seed(cfg, seed, run.root / ("seed_" + std::to_string(seed)), hooks));
  }
  return run;
}

}  // namespace cerl
