#pragma once

// One portfolio learner: a TD3 actor-critic with its own discount rate plus
// the rollout statistics the resource manager reads.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cerl/envs.hpp"
#include "cerl/nn.hpp"
#include "cerl/replay.hpp"
#include "cerl/rng.hpp"

namespace cerl {

struct Td3Config {
  double tau = 5e-3;
  std::size_t policy_delay = 2;
  double smoothing_sigma = 0.2;
  double smoothing_clip = 0.5;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  std::vector<std::size_t> hidden{64, 64};
  // Soft target update after every critic step; false ties it to actor steps.
  bool soft_update_every_step = true;

  bool operator==(const Td3Config&) const = default;
};

struct Learner {
  double gamma = 0.99;
  nn::Mlp actor;
  nn::Mlp critic_a;
  nn::Mlp critic_b;
  nn::Mlp target_actor;
  nn::Mlp target_critic_a;
  nn::Mlp target_critic_b;
  nn::AdamState actor_opt;
  nn::AdamState critic_a_opt;
  nn::AdamState critic_b_opt;
  ActionBounds bounds;

  double tau = 5e-3;
  std::size_t policy_delay = 2;
  double smoothing_sigma = 0.2;
  double smoothing_clip = 0.5;
  bool soft_update_every_step = true;

  std::uint64_t count = 0;  // rollouts run with this learner's actor
  double value = 0.0;       // smoothed rollout return
  std::uint64_t update_counter = 0;
  std::uint64_t actor_updates = 0;
  double last_critic_loss = 0.0;
  Rng rng;  // minibatch sampling and target smoothing
};

/// Actor: tanh output scaled to bounds. Critics take concat(state, action).
nn::MlpSpec actor_spec(const EnvSpec& env, const std::vector<std::size_t>& hidden);
nn::MlpSpec critic_spec(const EnvSpec& env, const std::vector<std::size_t>& hidden);

Learner make_learner(double gamma, const Td3Config& cfg, const EnvSpec& env, Rng& init_rng,
                     std::uint64_t stream_seed);

/// Maps tanh outputs in (-1, 1) into the action box.
Matrix scale_actions(const Matrix& unit, const ActionBounds& bounds);
std::vector<double> scale_action(std::span<const double> unit, const ActionBounds& bounds);

/// Deterministic policy action for a batch of states.
Matrix policy_actions(const nn::Mlp& actor, const ActionBounds& bounds, const Matrix& states);
std::vector<double> policy_action(const nn::Mlp& actor, const ActionBounds& bounds,
                                  std::span<const double> state);

/// Bootstrapped targets y = r + gamma (1 - done) min(Q'_a, Q'_b)(s', a~),
/// a~ = clip(pi'(s') + clip(N(0, sigma^2), -c, c)) with noise scaled by the
/// half-range of each action dimension.
std::vector<double> critic_targets(const Learner& learner, const Minibatch& batch, Rng& rng);

/// One Adam step on both critics toward the targets; returns the summed MSE.
double critic_update(Learner& learner, const Minibatch& batch, Rng& rng);

/// dQ/da for a batch of (state, action) rows.
using ActionGradient = std::function<Matrix(const Matrix& states, const Matrix& actions)>;

/// Gradient of -mean Q(s, pi(s)) with respect to the actor parameters.
nn::Mlp policy_gradient(const nn::Mlp& actor, const ActionBounds& bounds, const Matrix& states,
                        const ActionGradient& dq_da);
ActionGradient critic_action_gradient(const nn::Mlp& critic, std::size_t state_dim);

/// Adam step on the actor along the sampled policy gradient of critic_a.
void actor_update(Learner& learner, const Minibatch& batch);

void soft_update(Learner& learner);

/// value <- alpha * return + (1 - alpha) * value; count += 1.
void update_value_stat(Learner& learner, double rollout_return, double alpha);

/// clip(pi(state) + N(0, sigma^2) * half_range, bounds).
std::vector<double> behavioral_action(const Learner& learner, std::span<const double> state,
                                      double sigma, Rng& rng);

/// One gradient iteration: fresh minibatch, critic step, delayed actor step,
/// soft target update. Returns the critic loss.
double gradient_step(Learner& learner, const ReplayBuffer& buffer, std::size_t batch_size);

}  // namespace cerl
