#include "cerl/td3.hpp"

#include <algorithm>
#include <cmath>

#include "cerl/error.hpp"

namespace cerl {

nn::MlpSpec actor_spec(const EnvSpec& env, const std::vector<std::size_t>& hidden) {
  nn::MlpSpec s;
  s.in_dim = env.state_dim;
  s.hidden = hidden;
  s.out_dim = env.action_dim;
  s.output_activation = nn::Activation::tanh;
  return s;
}

nn::MlpSpec critic_spec(const EnvSpec& env, const std::vector<std::size_t>& hidden) {
  nn::MlpSpec s;
  s.in_dim = env.state_dim + env.action_dim;
  s.hidden = hidden;
  s.out_dim = 1;
  s.output_activation = nn::Activation::identity;
  return s;
}

Learner make_learner(double gamma, const Td3Config& cfg, const EnvSpec& env, Rng& init_rng,
                     std::uint64_t stream_seed) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("learner gamma must lie in [0, 1]");
  if (cfg.policy_delay == 0) throw ConfigError("policy_delay must be >= 1");
  Learner l;
  l.gamma = gamma;
  l.actor = nn::make_mlp(actor_spec(env, cfg.hidden), init_rng);
  l.critic_a = nn::make_mlp(critic_spec(env, cfg.hidden), init_rng);
  l.critic_b = nn::make_mlp(critic_spec(env, cfg.hidden), init_rng);
  l.target_actor = l.actor;
  l.target_critic_a = l.critic_a;
  l.target_critic_b = l.critic_b;
  l.actor_opt = nn::make_adam(l.actor, cfg.actor_lr);
  l.critic_a_opt = nn::make_adam(l.critic_a, cfg.critic_lr);
  l.critic_b_opt = nn::make_adam(l.critic_b, cfg.critic_lr);
  l.bounds = env.bounds;
  l.tau = cfg.tau;
  l.policy_delay = cfg.policy_delay;
  l.smoothing_sigma = cfg.smoothing_sigma;
  l.smoothing_clip = cfg.smoothing_clip;
  l.soft_update_every_step = cfg.soft_update_every_step;
  l.rng = Rng(stream_seed);
  return l;
}

Matrix scale_actions(const Matrix& unit, const ActionBounds& bounds) {
  if (unit.cols() != bounds.dim()) throw ShapeError("action width does not match bounds");
  Matrix out(unit.rows(), unit.cols());
  for (std::size_t t = 0; t < unit.rows(); ++t) {
    for (std::size_t j = 0; j < unit.cols(); ++j) {
      out(t, j) = bounds.center(j) + bounds.half_range(j) * unit(t, j);
    }
  }
  return out;
}

std::vector<double> scale_action(std::span<const double> unit, const ActionBounds& bounds) {
  if (unit.size() != bounds.dim()) throw ShapeError("action width does not match bounds");
  std::vector<double> out(unit.size());
  for (std::size_t j = 0; j < unit.size(); ++j) {
    out[j] = bounds.center(j) + bounds.half_range(j) * unit[j];
  }
  return out;
}

Matrix policy_actions(const nn::Mlp& actor, const ActionBounds& bounds, const Matrix& states) {
  return scale_actions(nn::predict(actor, states), bounds);
}

std::vector<double> policy_action(const nn::Mlp& actor, const ActionBounds& bounds,
                                  std::span<const double> state) {
  return scale_action(nn::predict_one(actor, state), bounds);
}

namespace {

void check_batch(const Minibatch& batch) {
  if (batch.size() == 0) throw UsageError("empty minibatch");
  if (batch.states.rows() != batch.size() || batch.actions.rows() != batch.size() ||
      batch.next_states.rows() != batch.size() || batch.dones.size() != batch.size()) {
    throw ShapeError("minibatch fields have inconsistent row counts");
  }
}

// Mean-squared-error step of one critic toward fixed targets.
double fit_critic(nn::Mlp& critic, nn::AdamState& opt, const Matrix& inputs,
                  const std::vector<double>& targets) {
  auto fwd = nn::forward(critic, inputs);
  const std::size_t n = targets.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix grad(n, 1);
  double loss = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double err = fwd.output(t, 0) - targets[t];
    loss += err * err;
    grad(t, 0) = 2.0 * err * inv_n;
  }
  auto g = nn::backward(critic, fwd.tape, grad);
  nn::adam_step(critic, g, opt);
  return loss * inv_n;
}

}  // namespace

std::vector<double> critic_targets(const Learner& learner, const Minibatch& batch, Rng& rng) {
  check_batch(batch);
  const std::size_t n = batch.size();
  Matrix next_actions = policy_actions(learner.target_actor, learner.bounds, batch.next_states);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < next_actions.cols(); ++j) {
      const double eps = std::clamp(gaussian(rng, learner.smoothing_sigma), -learner.smoothing_clip,
                                    learner.smoothing_clip);
      next_actions(t, j) = std::clamp(next_actions(t, j) + eps * learner.bounds.half_range(j),
                                      learner.bounds.low[j], learner.bounds.high[j]);
    }
  }
  const Matrix next_inputs = hconcat(batch.next_states, next_actions);
  const Matrix qa = nn::predict(learner.target_critic_a, next_inputs);
  const Matrix qb = nn::predict(learner.target_critic_b, next_inputs);
  std::vector<double> y(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double bootstrap = learner.gamma * (1.0 - batch.dones[t]);
    y[t] = bootstrap == 0.0 ? batch.rewards[t]
                            : batch.rewards[t] + bootstrap * std::min(qa(t, 0), qb(t, 0));
    if (!std::isfinite(y[t])) throw NumericError("non-finite critic target");
  }
  return y;
}

double critic_update(Learner& learner, const Minibatch& batch, Rng& rng) {
  const auto y = critic_targets(learner, batch, rng);
  const Matrix inputs = hconcat(batch.states, batch.actions);
  double loss = fit_critic(learner.critic_a, learner.critic_a_opt, inputs, y);
  loss += fit_critic(learner.critic_b, learner.critic_b_opt, inputs, y);
  ++learner.update_counter;
  learner.last_critic_loss = loss;
  return loss;
}

ActionGradient critic_action_gradient(const nn::Mlp& critic, std::size_t state_dim) {
  return [&critic, state_dim](const Matrix& states, const Matrix& actions) {
    const Matrix inputs = hconcat(states, actions);
    auto fwd = nn::forward(critic, inputs);
    const Matrix ones(inputs.rows(), 1, 1.0);
    const Matrix dx = nn::input_gradient(critic, fwd.tape, ones);
    return column_slice(dx, state_dim, actions.cols());
  };
}

nn::Mlp policy_gradient(const nn::Mlp& actor, const ActionBounds& bounds, const Matrix& states,
                        const ActionGradient& dq_da) {
  if (states.rows() == 0) throw UsageError("empty minibatch");
  auto fwd = nn::forward(actor, states);
  const Matrix actions = scale_actions(fwd.output, bounds);
  const Matrix dq = dq_da(states, actions);
  if (dq.rows() != actions.rows() || dq.cols() != actions.cols()) {
    throw ShapeError("action gradient has the wrong shape");
  }
  // Loss is -mean Q; chain through the affine action scaling.
  const double inv_n = 1.0 / static_cast<double>(states.rows());
  Matrix dy(actions.rows(), actions.cols());
  for (std::size_t t = 0; t < dy.rows(); ++t) {
    for (std::size_t j = 0; j < dy.cols(); ++j) {
      dy(t, j) = -dq(t, j) * bounds.half_range(j) * inv_n;
    }
  }
  return nn::backward(actor, fwd.tape, dy);
}

void actor_update(Learner& learner, const Minibatch& batch) {
  check_batch(batch);
  const auto grads = policy_gradient(learner.actor, learner.bounds, batch.states,
                                     critic_action_gradient(learner.critic_a, batch.states.cols()));
  nn::adam_step(learner.actor, grads, learner.actor_opt);
  ++learner.actor_updates;
}

void soft_update(Learner& learner) {
  nn::blend_into(learner.target_actor, learner.actor, learner.tau);
  nn::blend_into(learner.target_critic_a, learner.critic_a, learner.tau);
  nn::blend_into(learner.target_critic_b, learner.critic_b, learner.tau);
}

void update_value_stat(Learner& learner, double rollout_return, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw UsageError("value learning rate must lie in (0, 1]");
  if (!std::isfinite(rollout_return)) throw NumericError("non-finite rollout return");
  learner.value = alpha * rollout_return + (1.0 - alpha) * learner.value;
  ++learner.count;
}

std::vector<double> behavioral_action(const Learner& learner, std::span<const double> state,
                                      double sigma, Rng& rng) {
  auto a = policy_action(learner.actor, learner.bounds, state);
  if (sigma > 0.0) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      a[j] += gaussian(rng, sigma) * learner.bounds.half_range(j);
    }
  }
  learner.bounds.clip(a);
  return a;
}

double gradient_step(Learner& learner, const ReplayBuffer& buffer, std::size_t batch_size) {
  const Minibatch batch = buffer.sample(batch_size, learner.rng);
  const double loss = critic_update(learner, batch, learner.rng);
  const bool actor_turn = learner.update_counter % learner.policy_delay == 0;
  if (actor_turn) actor_update(learner, batch);
  if (learner.soft_update_every_step || actor_turn) soft_update(learner);
  return loss;
}

}  // namespace cerl
