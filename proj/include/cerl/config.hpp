#pragma once

// Run configuration and its TOML-style text format:
//
//   # comment
//   [section]
//   key = 1.5            # numbers
//   key = "text"         # strings
//   key = true           # booleans
//   key = [0.9, 0.99]    # flat arrays
//
// Keys are addressed as section.key; a key before any section header lives in
// [run]. Unknown keys and invalid values are rejected with the key name.
// docs/CONFIG.md lists every key with its default.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cerl/evolution.hpp"
#include "cerl/resource_manager.hpp"
#include "cerl/td3.hpp"

namespace cerl {

struct RunConfig {
  // [run]
  std::string profile = "desk";
  std::string env = "point_nav_2d";
  std::string algorithm = "cerl";  // "cerl" or "td3" (isolated learners, no population)
  std::vector<std::uint64_t> seeds{2018, 2019, 2020, 2021, 2022};
  std::size_t max_env_steps = 150000;
  std::string output_dir = "runs";
  std::size_t workers = 1;
  std::size_t champion_episodes = 10;
  bool trajectory_dump = false;
  bool replay_snapshot = false;

  // [portfolio]
  std::vector<double> gammas{0.9, 0.99, 0.997, 0.9995};
  double alpha = 0.2;
  double ucb_c = 0.9;
  std::size_t rollout_budget = 10;  // b
  std::string manager = "ucb";      // "ucb" or "constant"

  // [population]
  std::size_t population_size = 10;  // k
  std::size_t elites = 2;            // e, defaults to k / 5
  std::size_t omega = 5;             // Lamarckian period, 0 disables
  std::size_t tournament_size = 3;
  double crossover_fraction = 0.5;

  // [mutation]
  MutationConfig mutation;

  // [td3]
  Td3Config td3;
  std::size_t batch_size = 64;  // T; 256 in the paper profile
  std::size_t buffer_capacity = 200000;
  double exploration_sigma = 0.1;
  std::size_t warmup = 64;  // buffer size before the first gradient step, defaults to T

  bool operator==(const RunConfig&) const = default;

  std::size_t portfolio_size() const noexcept { return gammas.size(); }
  EvolutionConfig evolution() const;
  UcbConfig ucb() const;
};

/// Full-scale values: [400, 300] networks, batch 256, 1e6 buffer, 1e6 steps.
RunConfig paper_profile();

/// Throws ConfigError naming the offending key.
void validate(const RunConfig& cfg);

/// Parses text over the defaults of its profile; throws ParseError (with line)
/// or ConfigError (with key).
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Complete config text; parse_config(to_config_text(c)) == c.
std::string to_config_text(const RunConfig& cfg);

}  // namespace cerl
