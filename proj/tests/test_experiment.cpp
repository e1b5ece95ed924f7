#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cerl/error.hpp"
#include "cerl/experiment.hpp"
#include "cerl/plot.hpp"
#include "cerl/serialize.hpp"

using namespace cerl;
namespace fs = std::filesystem;

namespace {

RunConfig tiny() {
  RunConfig c;
  c.seeds = {5};
  c.gammas = {0.9, 0.99};
  c.population_size = 4;
  c.elites = 1;
  c.rollout_budget = 2;
  c.omega = 2;
  c.td3.hidden = {8, 8};
  c.batch_size = 16;
  c.warmup = 16;
  c.buffer_capacity = 10000;
  c.champion_episodes = 2;
  c.max_env_steps = 2400;  // two generations of (4 + 2) * 200 steps
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t lines(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("max_env_steps = 0 completes immediately with empty curves") {
  TempDir tmp("cerl_test_exp_zero");
  RunConfig c = tiny();
  c.max_env_steps = 0;
  const SeedRecord rec = run_seed(c, 5, tmp.path);
  CHECK(rec.generations.empty());
  CHECK(lines(tmp.path / "metrics.csv") == 1);
  CHECK(lines(tmp.path / "learners.csv") == 1);
  CHECK(lines(tmp.path / "allocation.csv") == 3);
  CHECK(fs::exists(tmp.path / "checkpoints" / "champion.mlp"));
  const auto table = plot::read_csv(tmp.path / "metrics.csv");
  CHECK(table.rows == 0);
  CHECK(table.header == metrics_columns());
}

TEST_CASE("one seed writes every documented file") {
  TempDir tmp("cerl_test_exp_files");
  RunConfig c = tiny();
  c.trajectory_dump = true;
  c.replay_snapshot = true;
  const SeedRecord rec = run_seed(c, 5, tmp.path);
  REQUIRE(rec.generations.size() == 2);
  CHECK_FALSE(rec.stopped_early);
  CHECK(rec.wall_seconds.size() == 2);
  for (const char* f : {"metrics.csv", "learners.csv", "manager.csv", "evolution.csv",
                        "allocation.csv", "timings.csv", "config.toml", "replay.bin",
                        "trajectory.csv"}) {
    CHECK_MESSAGE(fs::exists(tmp.path / f), f);
  }
  for (const char* f : {"champion.mlp", "learner_0_actor.mlp", "learner_1_critic_a.mlp",
                        "learner_1_critic_b.mlp"}) {
    CHECK_MESSAGE(fs::exists(tmp.path / "checkpoints" / f), f);
  }
  const auto m = plot::read_csv(tmp.path / "metrics.csv");
  CHECK(m.rows == 2);
  CHECK(m.column("total_steps") == std::vector<double>{1200, 2400});
  CHECK(m.column("generation_steps") == std::vector<double>{1200, 1200});
  CHECK(std::isfinite(m.column("champion_normalized")[1]));
  CHECK(lines(tmp.path / "learners.csv") == 1 + 2 * 2);
  CHECK(lines(tmp.path / "trajectory.csv") == 1 + 200);

  const auto alloc = plot::read_csv(tmp.path / "allocation.csv");
  CHECK(alloc.column("rollouts")[0] + alloc.column("rollouts")[1] == 4);
  CHECK(alloc.column("rate")[0] + alloc.column("rate")[1] == doctest::Approx(1.0));

  RunConfig snap = c;
  snap.seeds = {5};
  CHECK(load_config(tmp.path / "config.toml") == snap);
  CHECK(load_replay(tmp.path / "replay.bin").size() == 2400);
  CHECK(load_mlp(tmp.path / "checkpoints" / "champion.mlp").in_dim() == 4);
}

TEST_CASE("rerun with the same config and seed is byte identical") {
  TempDir a("cerl_test_exp_a"), b("cerl_test_exp_b");
  run_seed(tiny(), 5, a.path);
  run_seed(tiny(), 5, b.path);
  for (const char* f : {"metrics.csv", "learners.csv", "manager.csv", "evolution.csv",
                        "allocation.csv", "config.toml"}) {
    CHECK_MESSAGE(slurp(a.path / f) == slurp(b.path / f), f);
  }
  CHECK(slurp(a.path / "checkpoints" / "champion.mlp") ==
        slurp(b.path / "checkpoints" / "champion.mlp"));
}

TEST_CASE("the stop hook ends a seed early") {
  TempDir tmp("cerl_test_exp_stop");
  RunConfig c = tiny();
  c.max_env_steps = 100000;
  ExperimentHooks hooks;
  hooks.after_generation = [](std::uint64_t, const GenerationMetrics& m) { return m.generation == 1; };
  const SeedRecord rec = run_seed(c, 5, tmp.path, hooks);
  CHECK(rec.stopped_early);
  CHECK(rec.generations.size() == 1);
  CHECK(lines(tmp.path / "metrics.csv") == 2);
  CHECK(fs::exists(tmp.path / "allocation.csv"));
}

TEST_CASE("failures remove partial outputs") {
  ExperimentHooks boom;
  boom.after_generation = [](std::uint64_t, const GenerationMetrics&) -> bool {
    throw std::runtime_error("disk on fire");
  };
  SUBCASE("fresh directory is removed entirely") {
    TempDir tmp("cerl_test_exp_fail_new");
    CHECK_THROWS_AS(run_seed(tiny(), 5, tmp.path, boom), std::runtime_error);
    CHECK_FALSE(fs::exists(tmp.path));
  }
  SUBCASE("existing directory keeps unrelated files") {
    TempDir tmp("cerl_test_exp_fail_old");
    fs::create_directories(tmp.path);
    { std::ofstream(tmp.path / "notes.txt") << "keep me"; }
    CHECK_THROWS_AS(run_seed(tiny(), 5, tmp.path, boom), std::runtime_error);
    CHECK(fs::exists(tmp.path / "notes.txt"));
    CHECK_FALSE(fs::exists(tmp.path / "metrics.csv"));
    CHECK_FALSE(fs::exists(tmp.path / "config.toml"));
    CHECK_FALSE(fs::exists(tmp.path / "checkpoints"));
  }
  SUBCASE("invalid config writes nothing") {
    TempDir tmp("cerl_test_exp_fail_cfg");
    RunConfig c = tiny();
    c.elites = 4;
    CHECK_THROWS_AS(run_seed(c, 5, tmp.path), ConfigError);
    CHECK_FALSE(fs::exists(tmp.path));
  }
}

TEST_CASE("run_experiment lays out seeds under the output root") {
  TempDir tmp("cerl_test_exp_root");
  RunConfig c = tiny();
  c.seeds = {3, 4};
  c.max_env_steps = 1200;
  c.output_dir = (tmp.path / "from_config").string();
  ::setenv(kOutputRootVar, (tmp.path / "from_env").c_str(), 1);
  CHECK(output_root(c) == tmp.path / "from_env");
  const RunRecord run = run_experiment(c);
  ::unsetenv(kOutputRootVar);
  CHECK(output_root(c) == tmp.path / "from_config");
  CHECK(run.root == tmp.path / "from_env");
  REQUIRE(run.seeds.size() == 2);
  CHECK(fs::exists(run.root / "config.toml"));
  CHECK(load_config(run.root / "config.toml") == c);
  CHECK(fs::exists(run.root / "seed_3" / "metrics.csv"));
  CHECK(fs::exists(run.root / "seed_4" / "metrics.csv"));
  CHECK(slurp(run.root / "seed_3" / "metrics.csv") != slurp(run.root / "seed_4" / "metrics.csv"));
  CHECK(plot::metrics_files(run.root).size() == 2);
}
