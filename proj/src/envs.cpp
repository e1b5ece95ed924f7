#include "cerl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cerl/error.hpp"

namespace cerl {

void ActionBounds::clip(std::span<double> action) const {
  for (std::size_t i = 0; i < action.size(); ++i) action[i] = std::clamp(action[i], low[i], high[i]);
}

bool ActionBounds::contains(std::span<const double> action) const {
  if (action.size() != low.size()) return false;
  for (std::size_t i = 0; i < action.size(); ++i) {
    if (!(action[i] >= low[i] && action[i] <= high[i])) return false;
  }
  return true;
}

double ReferenceReturns::normalize(double value) const {
  const double span = optimal - baseline;
  if (span == 0.0) return value >= optimal ? 1.0 : 0.0;
  return (value - baseline) / span;
}

std::vector<double> Env::reset(Rng& rng) {
  steps_ = 0;
  done_ = false;
  started_ = true;
  return initial_state(rng);
}

StepResult Env::step(std::span<const double> action) {
  if (!started_ || done_) throw UsageError(spec_.name + ": step called on a finished episode");
  if (action.size() != spec_.action_dim) throw ShapeError(spec_.name + ": wrong action dimension");
  scratch_.assign(action.begin(), action.end());
  for (double v : scratch_) {
    if (!std::isfinite(v)) throw NumericError(spec_.name + ": non-finite action");
  }
  spec_.bounds.clip(scratch_);
  Outcome o = transition(scratch_);
  ++steps_;
  StepResult r;
  r.state = std::move(o.state);
  r.reward = o.reward;
  r.terminal = o.terminal;
  r.truncated = !o.terminal && steps_ >= spec_.max_steps;
  done_ = r.done();
  return r;
}

// PointNav2D ---------------------------------------------------------------

namespace {

EnvSpec point_nav_spec() {
  EnvSpec s;
  s.name = "point_nav_2d";
  s.state_dim = 4;
  s.action_dim = 2;
  s.bounds = {{-1.0, -1.0}, {1.0, 1.0}};
  s.max_steps = PointNav2D::kMaxSteps;
  s.reward_low = -3.0 * std::numbers::sqrt2;
  s.reward_high = 0.0;
  return s;
}

}  // namespace

PointNav2D::PointNav2D() : Env(point_nav_spec()) {}

std::vector<double> PointNav2D::initial_state(Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  px_ = u(rng);
  py_ = u(rng);
  gx_ = u(rng);
  gy_ = u(rng);
  start_x_ = px_;
  start_y_ = py_;
  return {px_, py_, gx_, gy_};
}

Env::Outcome PointNav2D::transition(std::span<const double> a) {
  px_ = std::clamp(px_ + kStepScale * a[0], -kArena, kArena);
  py_ = std::clamp(py_ + kStepScale * a[1], -kArena, kArena);
  Outcome o;
  o.state = {px_, py_, gx_, gy_};
  o.reward = -std::hypot(px_ - gx_, py_ - gy_);
  return o;
}

double PointNav2D::optimal_return(double px, double py, double gx, double gy) {
  const double dx = std::abs(gx - px);
  const double dy = std::abs(gy - py);
  double total = 0.0;
  for (std::size_t t = 1; t <= kMaxSteps; ++t) {
    const double reach = kStepScale * static_cast<double>(t);
    total -= std::hypot(std::max(dx - reach, 0.0), std::max(dy - reach, 0.0));
  }
  return total;
}

std::optional<ReferenceReturns> PointNav2D::reference_returns() const {
  ReferenceReturns r;
  r.optimal = optimal_return(start_x_, start_y_, gx_, gy_);
  r.baseline = -static_cast<double>(kMaxSteps) * std::hypot(start_x_ - gx_, start_y_ - gy_);
  return r;
}

// DelayedChain -------------------------------------------------------------

namespace {

EnvSpec chain_spec(const DelayedChainParams& p) {
  EnvSpec s;
  s.name = "delayed_chain";
  s.state_dim = 1;
  s.action_dim = 1;
  s.bounds = {{-1.0}, {1.0}};
  s.max_steps = p.max_steps;
  s.reward_low = std::min(-p.move_cost, 0.0);
  s.reward_high = std::max(p.goal_bonus, 0.0);
  return s;
}

}  // namespace

DelayedChain::DelayedChain(DelayedChainParams params)
    : Env(chain_spec(params)), params_(params) {
  if (params.step_scale <= 0.0 || params.max_steps == 0) {
    throw ConfigError("delayed_chain: step_scale and max_steps must be positive");
  }
}

std::vector<double> DelayedChain::initial_state(Rng& rng) {
  x_ = params_.start_jitter > 0.0
           ? std::uniform_real_distribution<double>(0.0, params_.start_jitter)(rng)
           : 0.0;
  start_ = x_;
  return {2.0 * x_ - 1.0};
}

Env::Outcome DelayedChain::transition(std::span<const double> a) {
  x_ = std::max(x_ + params_.step_scale * a[0], 0.0);
  Outcome o;
  if (x_ >= 1.0) {
    x_ = 1.0;
    o.terminal = true;
    o.reward = params_.goal_bonus;
  } else {
    o.reward = -params_.move_cost * std::abs(a[0]);
  }
  o.state = {2.0 * x_ - 1.0};
  return o;
}

double DelayedChain::optimal_return(double x0) const {
  const double needed = std::ceil((1.0 - x0) / params_.step_scale - 1e-12);
  if (needed > static_cast<double>(params_.max_steps)) return 0.0;
  // Every step but the last pays for its displacement; the last is free.
  const double paid = std::max((1.0 - x0) / params_.step_scale - 1.0, 0.0);
  return std::max(params_.goal_bonus - params_.move_cost * paid, 0.0);
}

std::optional<ReferenceReturns> DelayedChain::reference_returns() const {
  return ReferenceReturns{optimal_return(start_), 0.0};
}

// NoisyPendulum ------------------------------------------------------------

namespace {

EnvSpec pendulum_spec() {
  EnvSpec s;
  s.name = "noisy_pendulum";
  s.state_dim = 3;
  s.action_dim = 1;
  s.bounds = {{-1.0}, {1.0}};
  s.max_steps = 200;
  const double pi = std::numbers::pi;
  s.reward_low = -(pi * pi + 0.1 * NoisyPendulum::kMaxSpeed * NoisyPendulum::kMaxSpeed +
                   0.001 * NoisyPendulum::kMaxTorque * NoisyPendulum::kMaxTorque);
  s.reward_high = 0.0;
  return s;
}

double wrap_angle(double theta) {
  const double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(theta + std::numbers::pi, two_pi);
  if (w < 0.0) w += two_pi;
  return w - std::numbers::pi;
}

}  // namespace

NoisyPendulum::NoisyPendulum() : Env(pendulum_spec()) {}

std::vector<double> NoisyPendulum::initial_state(Rng& rng) {
  theta_ = std::uniform_real_distribution<double>(-std::numbers::pi, std::numbers::pi)(rng);
  omega_ = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  noise_ = Rng(rng());
  return observe();
}

std::vector<double> NoisyPendulum::observe() {
  return {std::cos(theta_) + gaussian(noise_, kObservationNoise),
          std::sin(theta_) + gaussian(noise_, kObservationNoise),
          omega_ / kMaxSpeed + gaussian(noise_, kObservationNoise)};
}

Env::Outcome NoisyPendulum::transition(std::span<const double> a) {
  const double torque = kMaxTorque * a[0];
  const double th = wrap_angle(theta_);
  Outcome o;
  o.reward = -(th * th + 0.1 * omega_ * omega_ + 0.001 * torque * torque);
  omega_ = std::clamp(omega_ + (1.5 * kGravity * std::sin(theta_) + 3.0 * torque) * kDt,
                      -kMaxSpeed, kMaxSpeed);
  theta_ += omega_ * kDt;
  o.state = observe();
  return o;
}

// Factory ------------------------------------------------------------------

std::unique_ptr<Env> make_env(std::string_view name) {
  if (name == "point_nav_2d") return std::make_unique<PointNav2D>();
  if (name == "delayed_chain") return std::make_unique<DelayedChain>();
  if (name == "noisy_pendulum") return std::make_unique<NoisyPendulum>();
  throw ConfigError("unknown environment '" + std::string(name) + "'");
}

std::vector<std::string> env_names() { return {"point_nav_2d", "delayed_chain", "noisy_pendulum"}; }

}  // namespace cerl
