#pragma once

// Neuroevolutionary population over actor networks.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cerl/nn.hpp"
#include "cerl/rng.hpp"

namespace cerl {

struct MutationConfig {
  double mut_prob = 0.9;
  double mut_frac = 0.1;
  double mut_strength = 0.1;
  double supermut_prob = 0.05;
  double reset_prob = 0.05;
  double weight_limit = 1e6;  // |parameter| clamp after perturbation

  bool operator==(const MutationConfig&) const = default;
};

struct EvolutionConfig {
  std::size_t elite_count = 2;
  std::size_t tournament_size = 3;
  // Share of the non-elite slots filled by crossover children (rounded down);
  // the rest are tournament survivors.
  double crossover_fraction = 0.5;
};

struct Population {
  std::vector<nn::Mlp> genomes;
  std::vector<std::optional<double>> fitness;  // this generation's evaluation
  // Fitness inherited from the parent a slot was bred from; ranks slots that
  // have not been evaluated yet (Lamarckian victim choice).
  std::vector<double> lineage_fitness;
  std::vector<std::size_t> elite_slots;  // elites carried into the current generation
  std::size_t elite_count = 2;
  std::uint64_t generation = 0;

  std::size_t size() const noexcept { return genomes.size(); }
  bool evaluated() const;
  /// Last known fitness of a slot: this generation's if evaluated, else inherited.
  double known_fitness(std::size_t slot) const;
};

/// k independently initialized actors; requires k >= 2 and 1 <= e < k.
Population make_population(std::size_t k, std::size_t elite_count, const nn::MlpSpec& spec,
                           Rng& rng);

struct Selection {
  std::vector<std::size_t> elites;     // best first
  std::vector<std::size_t> survivors;  // tournament winners
};

/// Top-e slots by fitness, ties broken by lower index.
std::vector<std::size_t> rank_elites(const Population& pop);

/// n picks, each the best of `tournament_size` uniform draws (with replacement).
std::vector<std::size_t> tournament_select(const Population& pop, std::size_t n,
                                           std::size_t tournament_size, Rng& rng);

/// Elites plus `survivor_count` tournament winners.
Selection rank_and_select(const Population& pop, std::size_t survivor_count,
                          std::size_t tournament_size, Rng& rng);

/// Child takes parent_a's genes [0, cut) and parent_b's genes [cut, n) in
/// genome order (see nn::Mlp::blocks).
nn::Mlp crossover_at(const nn::Mlp& parent_a, const nn::Mlp& parent_b, std::size_t cut);
/// Cut drawn uniformly from {0, ..., n}.
nn::Mlp crossover(const nn::Mlp& parent_a, const nn::Mlp& parent_b, Rng& rng);

struct MutationStats {
  std::uint64_t super = 0;
  std::uint64_t reset = 0;
  std::uint64_t ordinary = 0;

  std::uint64_t total() const noexcept { return super + reset + ordinary; }
  MutationStats& operator+=(const MutationStats& o) {
    super += o.super;
    reset += o.reset;
    ordinary += o.ordinary;
    return *this;
  }
};

/// Perturbs floor(mut_frac * |M|) uniformly drawn entries of every parameter
/// block M. Per entry: with supermut_prob, w *= 1 + N(0, 100 mut_strength);
/// else with reset_prob, w = N(0, 1); else w *= 1 + N(0, mut_strength).
MutationStats mutate(nn::Mlp& genome, const MutationConfig& cfg, Rng& rng);

struct GenerationReport {
  std::vector<std::size_t> elites;  // slots in the evaluated population
  double best = 0.0;
  double mean = 0.0;
  double worst = 0.0;
  MutationStats mutations;
  std::size_t mutated_genomes = 0;
};

/// Replaces the population with its offspring: elites first (unmodified), then
/// tournament survivors, then crossover children of (random elite, random
/// survivor); every non-elite is mutated with probability mut_prob.
GenerationReport next_generation(Population& pop, const EvolutionConfig& evo,
                                 const MutationConfig& mut, Rng& rng);

}  // namespace cerl
