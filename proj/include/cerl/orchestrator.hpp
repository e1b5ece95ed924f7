#pragma once

// The generation loop: evaluate and evolve the population, run learner
// rollouts under the current allocation, train every learner for as many
// iterations as environment steps were taken, reallocate the rollout budget by
// UCB, and periodically copy learner actors into the population.
//
// Rollouts of a phase may run on several OpenMP threads. Each rollout is
// seeded from the master stream before dispatch and its transitions are pushed
// to the shared buffer in task order once the phase completes, so results do
// not depend on the worker count.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "cerl/config.hpp"
#include "cerl/envs.hpp"
#include "cerl/evolution.hpp"
#include "cerl/nn.hpp"
#include "cerl/replay.hpp"
#include "cerl/resource_manager.hpp"
#include "cerl/td3.hpp"

namespace cerl {

enum class RolloutSource { population, learner, champion };

struct RolloutResult {
  double fitness = 0.0;  // undiscounted episode return
  std::size_t steps = 0;
  RolloutSource source = RolloutSource::population;
  std::size_t index = 0;  // genome slot or learner index
};

struct Episode {
  RolloutResult result;
  std::vector<Transition> transitions;
};

/// One episode with action = clip(pi(s) + N(0, sigma^2) * half_range); sigma = 0
/// runs the deterministic policy.
Episode rollout(const nn::Mlp& actor, const ActionBounds& bounds, Env& env, double noise_sigma,
                Rng& rng);

/// rollout() and push every transition into `buffer`.
RolloutResult evaluate(const nn::Mlp& actor, const ActionBounds& bounds, Env& env,
                       ReplayBuffer& buffer, double noise_sigma, Rng& rng);

/// Overwrites the weakest genomes (by last known fitness) with the learners'
/// actors, one distinct slot per learner in portfolio order. Elites are used
/// only once every other slot is taken. Returns the replaced slots.
std::vector<std::size_t> lamarckian_transfer(const std::vector<Learner>& portfolio,
                                             Population& population);

struct LearnerMetrics {
  double gamma = 0.0;
  double value = 0.0;
  double normalized_value = 0.0;
  std::uint64_t count = 0;
  double ucb = 0.0;
  std::size_t allocated = 0;  // workers used this generation
  double critic_loss = 0.0;
  std::uint64_t actor_updates = 0;
};

struct ChampionScore {
  double mean_return = 0.0;
  std::optional<double> normalized;  // needs environment reference returns
  double mean_optimal = 0.0;
  double mean_baseline = 0.0;
};

struct GenerationMetrics {
  std::uint64_t generation = 0;
  std::uint64_t total_steps = 0;
  std::uint64_t generation_steps = 0;
  std::uint64_t ups = 0;  // gradient iterations per learner
  std::size_t buffer_size = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double min_fitness = 0.0;
  std::optional<ChampionScore> champion;
  std::vector<std::size_t> elites;
  MutationStats mutations;
  std::vector<std::size_t> transferred;  // genome slots overwritten this generation
  std::vector<LearnerMetrics> learners;
};

struct CerlState {
  RunConfig config;
  std::uint64_t seed = 0;
  std::unique_ptr<Env> env;  // template, cloned per rollout
  std::vector<Learner> portfolio;
  std::optional<Population> population;  // absent for isolated-learner runs
  ReplayBuffer buffer;
  Allocation allocation;
  std::uint64_t generation = 0;
  std::uint64_t total_env_steps = 0;
  double alpha = 0.2;
  std::size_t omega = 5;
  Rng master;       // rollout seeds, evolution
  Rng manager_rng;  // allocation sampling
  Rng eval_rng;     // champion episodes
  nn::Mlp champion;
  double champion_fitness = 0.0;
  std::vector<std::uint64_t> cumulative_allocation;

  CerlState(const RunConfig& cfg, std::uint64_t seed_value);
  CerlState(const RunConfig& cfg, std::uint64_t seed_value, std::unique_ptr<Env> environment);
  CerlState(CerlState&&) noexcept = default;
  CerlState& operator=(CerlState&&) noexcept = default;
};

GenerationMetrics run_generation(CerlState& state);

/// Mean return of the current champion over n fresh noiseless episodes; neither
/// steps nor transitions are recorded.
ChampionScore champion_eval(CerlState& state, std::size_t n_episodes);

/// Per-step CSV (step, state..., action..., reward, done) of one noiseless episode.
void write_trajectory_csv(const std::filesystem::path& path, const nn::Mlp& actor,
                          const ActionBounds& bounds, Env& env, Rng& rng);

}  // namespace cerl
