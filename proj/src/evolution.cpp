#include "cerl/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cerl/error.hpp"

namespace cerl {

bool Population::evaluated() const {
  return !fitness.empty() &&
         std::all_of(fitness.begin(), fitness.end(), [](const auto& f) { return f.has_value(); });
}

double Population::known_fitness(std::size_t slot) const {
  return fitness[slot] ? *fitness[slot] : lineage_fitness[slot];
}

Population make_population(std::size_t k, std::size_t elite_count, const nn::MlpSpec& spec,
                           Rng& rng) {
  if (k < 2) throw ConfigError("population needs at least 2 genomes");
  if (elite_count < 1 || elite_count >= k) throw ConfigError("elite count must satisfy 1 <= e < k");
  Population pop;
  pop.elite_count = elite_count;
  for (std::size_t i = 0; i < k; ++i) pop.genomes.push_back(nn::make_mlp(spec, rng));
  pop.fitness.assign(k, std::nullopt);
  pop.lineage_fitness.assign(k, 0.0);
  return pop;
}

namespace {

void require_evaluated(const Population& pop) {
  if (!pop.evaluated()) throw StateError("population fitness has not been evaluated");
}

}  // namespace

std::vector<std::size_t> rank_elites(const Population& pop) {
  require_evaluated(pop);
  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return *pop.fitness[a] > *pop.fitness[b]; });
  order.resize(std::min(pop.elite_count, order.size()));
  return order;
}

std::vector<std::size_t> tournament_select(const Population& pop, std::size_t n,
                                           std::size_t tournament_size, Rng& rng) {
  require_evaluated(pop);
  if (tournament_size < 1) throw UsageError("tournament size must be >= 1");
  std::vector<std::size_t> picks;
  picks.reserve(n);
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t best = uniform_index(rng, pop.size());
    for (std::size_t r = 1; r < tournament_size; ++r) {
      const std::size_t c = uniform_index(rng, pop.size());
      if (*pop.fitness[c] > *pop.fitness[best] ||
          (*pop.fitness[c] == *pop.fitness[best] && c < best)) {
        best = c;
      }
    }
    picks.push_back(best);
  }
  return picks;
}

Selection rank_and_select(const Population& pop, std::size_t survivor_count,
                          std::size_t tournament_size, Rng& rng) {
  Selection s;
  s.elites = rank_elites(pop);
  s.survivors = tournament_select(pop, survivor_count, tournament_size, rng);
  return s;
}

nn::Mlp crossover_at(const nn::Mlp& parent_a, const nn::Mlp& parent_b, std::size_t cut) {
  if (!parent_a.same_shape(parent_b)) throw ShapeError("crossover parents differ in architecture");
  nn::Mlp child = parent_a;
  auto dst = child.blocks();
  const auto src = parent_b.blocks();
  std::size_t offset = 0;
  for (std::size_t k = 0; k < dst.size(); ++k) {
    const std::size_t n = dst[k].size();
    for (std::size_t i = 0; i < n; ++i) {
      if (offset + i >= cut) dst[k][i] = src[k][i];
    }
    offset += n;
  }
  return child;
}

nn::Mlp crossover(const nn::Mlp& parent_a, const nn::Mlp& parent_b, Rng& rng) {
  if (!parent_a.same_shape(parent_b)) throw ShapeError("crossover parents differ in architecture");
  const std::size_t n = parent_a.parameter_count();
  const std::size_t cut = std::uniform_int_distribution<std::size_t>(0, n)(rng);
  return crossover_at(parent_a, parent_b, cut);
}

MutationStats mutate(nn::Mlp& genome, const MutationConfig& cfg, Rng& rng) {
  MutationStats stats;
  const double super_strength = 100.0 * cfg.mut_strength;
  for (auto block : genome.blocks()) {
    const auto events =
        static_cast<std::size_t>(std::floor(cfg.mut_frac * static_cast<double>(block.size())));
    for (std::size_t e = 0; e < events; ++e) {
      double& w = block[uniform_index(rng, block.size())];
      if (uniform01(rng) < cfg.supermut_prob) {
        w *= 1.0 + gaussian(rng, super_strength);
        ++stats.super;
      } else if (uniform01(rng) < cfg.reset_prob) {
        w = gaussian(rng, 1.0);
        ++stats.reset;
      } else {
        w *= 1.0 + gaussian(rng, cfg.mut_strength);
        ++stats.ordinary;
      }
      w = std::clamp(w, -cfg.weight_limit, cfg.weight_limit);
    }
  }
  if (stats.total() > 0) genome.touch();
  return stats;
}

GenerationReport next_generation(Population& pop, const EvolutionConfig& evo,
                                 const MutationConfig& mut, Rng& rng) {
  require_evaluated(pop);
  const std::size_t k = pop.size();
  const std::size_t e = pop.elite_count;
  const std::size_t open = k - e;
  const auto children = static_cast<std::size_t>(
      std::floor(evo.crossover_fraction * static_cast<double>(open)));
  const std::size_t survivors = open - children;

  GenerationReport report;
  double sum = 0.0;
  report.best = *pop.fitness[0];
  report.worst = *pop.fitness[0];
  for (const auto& f : pop.fitness) {
    sum += *f;
    report.best = std::max(report.best, *f);
    report.worst = std::min(report.worst, *f);
  }
  report.mean = sum / static_cast<double>(k);

  // Crossover children pair with a survivor, so keep at least one.
  const std::size_t tournament_picks = std::max<std::size_t>(survivors, children > 0 ? 1 : 0);
  const Selection sel = rank_and_select(pop, tournament_picks, evo.tournament_size, rng);
  report.elites = sel.elites;

  std::vector<nn::Mlp> next;
  std::vector<double> lineage;
  next.reserve(k);
  for (std::size_t idx : sel.elites) {
    next.push_back(pop.genomes[idx]);
    lineage.push_back(*pop.fitness[idx]);
  }
  for (std::size_t s = 0; s < survivors; ++s) {
    const std::size_t idx = sel.survivors[s];
    next.push_back(pop.genomes[idx]);
    lineage.push_back(*pop.fitness[idx]);
  }
  for (std::size_t c = 0; c < children; ++c) {
    const std::size_t a = sel.elites[uniform_index(rng, sel.elites.size())];
    const std::size_t b = sel.survivors[uniform_index(rng, sel.survivors.size())];
    next.push_back(crossover(pop.genomes[a], pop.genomes[b], rng));
    lineage.push_back(0.5 * (*pop.fitness[a] + *pop.fitness[b]));
  }
  for (std::size_t i = e; i < k; ++i) {
    if (uniform01(rng) < mut.mut_prob) {
      report.mutations += mutate(next[i], mut, rng);
      ++report.mutated_genomes;
    }
  }

  pop.genomes = std::move(next);
  pop.lineage_fitness = std::move(lineage);
  pop.fitness.assign(k, std::nullopt);
  pop.elite_slots.resize(e);
  std::iota(pop.elite_slots.begin(), pop.elite_slots.end(), 0);
  ++pop.generation;
  return report;
}

}  // namespace cerl
