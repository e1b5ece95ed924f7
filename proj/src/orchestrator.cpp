#include "cerl/orchestrator.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>

#include <omp.h>

#include "cerl/error.hpp"

namespace cerl {

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads and rethrows the first
// exception on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  const int threads = static_cast<int>(std::max<std::size_t>(1, std::min(workers, n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
#pragma omp critical(cerl_parallel_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

struct RolloutTask {
  const nn::Mlp* actor = nullptr;
  double noise = 0.0;
  std::uint64_t seed = 0;
  RolloutSource source = RolloutSource::population;
  std::size_t index = 0;
};

std::vector<Episode> run_tasks(const std::vector<RolloutTask>& tasks, const Env& env_template,
                               const ActionBounds& bounds, std::size_t workers) {
  std::vector<Episode> episodes(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    auto env = env_template.clone();
    Rng rng(tasks[i].seed);
    episodes[i] = rollout(*tasks[i].actor, bounds, *env, tasks[i].noise, rng);
    episodes[i].result.source = tasks[i].source;
    episodes[i].result.index = tasks[i].index;
  });
  return episodes;
}

void validate_state_config(const RunConfig& cfg) {
  validate(cfg);
  if (cfg.algorithm == "cerl" && cfg.portfolio_size() > cfg.population_size) {
    throw ConfigError("portfolio.gammas: more learners than population slots");
  }
}

}  // namespace

Episode rollout(const nn::Mlp& actor, const ActionBounds& bounds, Env& env, double noise_sigma,
                Rng& rng) {
  if (actor.in_dim() != env.spec().state_dim || actor.out_dim() != env.spec().action_dim) {
    throw ShapeError("actor dimensions do not match environment " + env.spec().name);
  }
  Episode ep;
  ep.transitions.reserve(env.spec().max_steps);
  std::vector<double> state = env.reset(rng);
  while (!env.done()) {
    std::vector<double> action = policy_action(actor, bounds, state);
    if (noise_sigma > 0.0) {
      for (std::size_t j = 0; j < action.size(); ++j) {
        action[j] += gaussian(rng, noise_sigma) * bounds.half_range(j);
      }
    }
    bounds.clip(action);
    StepResult r = env.step(action);
    ep.result.fitness += r.reward;
    ++ep.result.steps;
    Transition t;
    t.state = std::move(state);
    t.action = std::move(action);
    t.reward = r.reward;
    t.next_state = r.state;
    t.done = r.terminal;
    ep.transitions.push_back(std::move(t));
    state = std::move(r.state);
  }
  return ep;
}

RolloutResult evaluate(const nn::Mlp& actor, const ActionBounds& bounds, Env& env,
                       ReplayBuffer& buffer, double noise_sigma, Rng& rng) {
  Episode ep = rollout(actor, bounds, env, noise_sigma, rng);
  for (const auto& t : ep.transitions) buffer.push(t);
  return ep.result;
}

std::vector<std::size_t> lamarckian_transfer(const std::vector<Learner>& portfolio,
                                             Population& population) {
  const std::size_t k = population.size();
  if (portfolio.size() > k) throw ConfigError("more learners than population slots");

  std::vector<bool> protect(k, false);
  const std::vector<std::size_t> elites =
      population.evaluated() ? rank_elites(population) : population.elite_slots;
  for (std::size_t e : elites) protect[e] = true;

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (protect[a] != protect[b]) return !protect[a];
    return population.known_fitness(a) < population.known_fitness(b);
  });

  std::vector<std::size_t> victims;
  for (std::size_t i = 0; i < portfolio.size(); ++i) {
    const std::size_t slot = order[i];
    population.genomes[slot] = portfolio[i].actor;
    victims.push_back(slot);
  }
  return victims;
}

CerlState::CerlState(const RunConfig& cfg, std::uint64_t seed_value)
    : CerlState(cfg, seed_value, make_env(cfg.env)) {}

CerlState::CerlState(const RunConfig& cfg, std::uint64_t seed_value,
                     std::unique_ptr<Env> environment)
    : config(cfg),
      seed(seed_value),
      env(std::move(environment)),
      buffer(cfg.buffer_capacity, env->spec().state_dim, env->spec().action_dim),
      alpha(cfg.alpha),
      omega(cfg.omega),
      master(make_stream(seed_value, 0)),
      manager_rng(make_stream(seed_value, 1)),
      eval_rng(make_stream(seed_value, 2)) {
  validate_state_config(cfg);
  const EnvSpec& spec = env->spec();
  Rng init = make_stream(seed_value, 3);
  for (std::size_t i = 0; i < cfg.gammas.size(); ++i) {
    portfolio.push_back(make_learner(cfg.gammas[i], cfg.td3, spec, init,
                                     mix_seed(seed_value * 1000003ULL + 17 + i)));
  }
  if (cfg.algorithm == "cerl") {
    population = make_population(cfg.population_size, cfg.elites,
                                 actor_spec(spec, cfg.td3.hidden), init);
    champion = population->genomes.front();
  } else {
    champion = portfolio.front().actor;
  }
  allocation = initial_allocation(portfolio.size(), cfg.rollout_budget);
  cumulative_allocation.assign(portfolio.size(), 0);
}

GenerationMetrics run_generation(CerlState& state) {
  const RunConfig& cfg = state.config;
  const ActionBounds& bounds = state.env->spec().bounds;
  GenerationMetrics m;
  m.generation = ++state.generation;
  std::uint64_t gen_steps = 0;

  // (1) noiseless population evaluation
  if (state.population) {
    Population& pop = *state.population;
    // Every genome plays the same episode so fitness is comparable within a
    // generation (common random numbers).
    const std::uint64_t episode_seed = state.master();
    std::vector<RolloutTask> tasks(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
      tasks[i] = {&pop.genomes[i], 0.0, episode_seed, RolloutSource::population, i};
    }
    auto episodes = run_tasks(tasks, *state.env, bounds, cfg.workers);
    for (auto& ep : episodes) {
      for (const auto& t : ep.transitions) state.buffer.push(t);
      pop.fitness[ep.result.index] = ep.result.fitness;
      gen_steps += ep.result.steps;
    }
    const std::size_t best = rank_elites(pop).front();
    state.champion = pop.genomes[best];
    state.champion_fitness = *pop.fitness[best];

    // (2) selection, crossover, mutation
    const GenerationReport rep = next_generation(pop, cfg.evolution(), cfg.mutation, state.master);
    m.best_fitness = rep.best;
    m.mean_fitness = rep.mean;
    m.min_fitness = rep.worst;
    m.elites = rep.elites;
    m.mutations = rep.mutations;
  }

  // (3) learner rollouts under the current allocation
  {
    std::vector<RolloutTask> tasks;
    for (std::size_t l = 0; l < state.portfolio.size(); ++l) {
      for (std::size_t r = 0; r < state.allocation.counts[l]; ++r) {
        tasks.push_back({&state.portfolio[l].actor, cfg.exploration_sigma, state.master(),
                         RolloutSource::learner, l});
      }
    }
    auto episodes = run_tasks(tasks, *state.env, bounds, cfg.workers);
    double best = -std::numeric_limits<double>::infinity();
    double worst = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (auto& ep : episodes) {
      for (const auto& t : ep.transitions) state.buffer.push(t);
      update_value_stat(state.portfolio[ep.result.index], ep.result.fitness, state.alpha);
      gen_steps += ep.result.steps;
      best = std::max(best, ep.result.fitness);
      worst = std::min(worst, ep.result.fitness);
      sum += ep.result.fitness;
    }
    if (!state.population && !episodes.empty()) {
      m.best_fitness = best;
      m.min_fitness = worst;
      m.mean_fitness = sum / static_cast<double>(episodes.size());
      state.champion = state.portfolio.front().actor;
      state.champion_fitness = best;
    }
  }
  for (std::size_t l = 0; l < state.portfolio.size(); ++l) {
    state.cumulative_allocation[l] += state.allocation.counts[l];
  }

  // (4) gradient phase
  m.ups = gen_steps;
  if (state.buffer.size() >= std::max(cfg.warmup, cfg.batch_size) && gen_steps > 0) {
    parallel_for(state.portfolio.size(), cfg.workers, [&](std::size_t l) {
      Learner& learner = state.portfolio[l];
      for (std::uint64_t it = 0; it < gen_steps; ++it) {
        gradient_step(learner, state.buffer, cfg.batch_size);
      }
    });
  } else {
    m.ups = 0;
  }
  if (!state.population) state.champion = state.portfolio.front().actor;

  // (5) UCB scores and the next allocation
  std::vector<double> values;
  std::vector<std::int64_t> counts;
  for (const auto& l : state.portfolio) {
    values.push_back(l.value);
    counts.push_back(static_cast<std::int64_t>(l.count));
  }
  const std::vector<double> vn = normalize_values(values);
  const std::vector<double> ucb = ucb_from_normalized(vn, counts, cfg.ucb_c);
  const Allocation used = state.allocation;
  if (cfg.manager == "ucb") {
    state.allocation = allocate(ucb, cfg.rollout_budget, state.manager_rng);
  } else {
    state.allocation = initial_allocation(state.portfolio.size(), cfg.rollout_budget);
  }

  // (6) Lamarckian transfer
  if (state.population && state.omega > 0 && state.generation % state.omega == 0) {
    m.transferred = lamarckian_transfer(state.portfolio, *state.population);
  }

  state.total_env_steps += gen_steps;
  m.generation_steps = gen_steps;
  m.total_steps = state.total_env_steps;
  m.buffer_size = state.buffer.size();
  for (std::size_t l = 0; l < state.portfolio.size(); ++l) {
    const Learner& learner = state.portfolio[l];
    LearnerMetrics lm;
    lm.gamma = learner.gamma;
    lm.value = learner.value;
    lm.normalized_value = vn[l];
    lm.count = learner.count;
    lm.ucb = ucb[l];
    lm.allocated = used.counts[l];
    lm.critic_loss = learner.last_critic_loss;
    lm.actor_updates = learner.actor_updates;
    m.learners.push_back(lm);
  }
  if (cfg.champion_episodes > 0) m.champion = champion_eval(state, cfg.champion_episodes);
  return m;
}

ChampionScore champion_eval(CerlState& state, std::size_t n_episodes) {
  if (n_episodes == 0) throw UsageError("champion evaluation needs at least one episode");
  const ActionBounds& bounds = state.env->spec().bounds;
  auto env = state.env->clone();
  ChampionScore score;
  bool have_reference = true;
  for (std::size_t i = 0; i < n_episodes; ++i) {
    Rng rng(state.eval_rng());
    Episode ep = rollout(state.champion, bounds, *env, 0.0, rng);
    score.mean_return += ep.result.fitness;
    if (auto ref = env->reference_returns()) {
      score.mean_optimal += ref->optimal;
      score.mean_baseline += ref->baseline;
    } else {
      have_reference = false;
    }
  }
  const double n = static_cast<double>(n_episodes);
  score.mean_return /= n;
  score.mean_optimal /= n;
  score.mean_baseline /= n;
  if (have_reference) {
    score.normalized = ReferenceReturns{score.mean_optimal, score.mean_baseline}.normalize(
        score.mean_return);
  }
  return score;
}

void write_trajectory_csv(const std::filesystem::path& path, const nn::Mlp& actor,
                          const ActionBounds& bounds, Env& env, Rng& rng) {
  Episode ep = rollout(actor, bounds, env, 0.0, rng);
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string());
  const std::size_t sd = env.spec().state_dim;
  const std::size_t ad = env.spec().action_dim;
  out << "step";
  for (std::size_t i = 0; i < sd; ++i) out << ",s" << i;
  for (std::size_t i = 0; i < ad; ++i) out << ",a" << i;
  out << ",reward,done\n";
  out.precision(17);
  for (std::size_t s = 0; s < ep.transitions.size(); ++s) {
    const auto& t = ep.transitions[s];
    out << s;
    for (double v : t.state) out << ',' << v;
    for (double v : t.action) out << ',' << v;
    out << ',' << t.reward << ',' << (t.done ? 1 : 0) << '\n';
  }
}

}  // namespace cerl
