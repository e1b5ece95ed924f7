#pragma once

// Episodic continuous-control tasks with documented dynamics.
//
// PointNav2D
//   state  [px, py, gx, gy]; start and goal ~ U[-1,1]^2 independently
//   action velocity command in [-1,1]^2, position += 0.05 * a, clamped to [-2,2]^2
//   reward -||p' - goal|| after the move, in [-3*sqrt(2), 0]; 200 steps, never terminal
//   optimum: move each coordinate toward the goal at full speed; return is
//   -sum_t ||(max(|dx| - 0.05 t, 0), max(|dy| - 0.05 t, 0))||.
//
// DelayedChain
//   1-D corridor x in [0, 1]; start x0 ~ U[0, 0.1]; state [2x - 1]
//   action a in [-1,1], x += 0.02 * a, clamped at 0
//   reward -move_cost * |a| per step; reaching x >= 1 terminates with reward
//   +goal_bonus (no cost on that step); 64-step limit. Staying still scores 0,
//   the optimum is goal_bonus - move_cost * ((1 - x0) / 0.02 - 1).
//
// NoisyPendulum
//   torque-limited swing-up; theta0 ~ U[-pi, pi], omega0 ~ U[-1, 1]
//   action in [-1,1] scaled to torque 2u; omega += (3 g / 2 sin(theta) + 3 u') dt
//   with dt = 0.05, g = 10, omega clipped to [-8, 8]
//   observation [cos, sin, omega / 8] + N(0, 0.02^2) per component
//   reward -(theta^2 + 0.1 omega^2 + 0.001 u'^2), theta wrapped to [-pi, pi]; 200 steps

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cerl/rng.hpp"

namespace cerl {

struct ActionBounds {
  std::vector<double> low;
  std::vector<double> high;

  std::size_t dim() const noexcept { return low.size(); }
  double half_range(std::size_t i) const noexcept { return 0.5 * (high[i] - low[i]); }
  double center(std::size_t i) const noexcept { return 0.5 * (high[i] + low[i]); }
  void clip(std::span<double> action) const;
  bool contains(std::span<const double> action) const;
};

struct EnvSpec {
  std::string name;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  ActionBounds bounds;
  std::size_t max_steps = 1;
  double reward_low = 0.0;
  double reward_high = 0.0;
};

struct StepResult {
  std::vector<double> state;
  double reward = 0.0;
  bool terminal = false;
  bool truncated = false;

  bool done() const noexcept { return terminal || truncated; }
};

/// Returns of reference policies for the current episode's initial state.
struct ReferenceReturns {
  double optimal = 0.0;
  double baseline = 0.0;  // zero-action policy

  /// (value - baseline) / (optimal - baseline).
  double normalize(double value) const;
};

class Env {
 public:
  virtual ~Env() = default;

  const EnvSpec& spec() const noexcept { return spec_; }

  std::vector<double> reset(Rng& rng);
  /// Clips the action to bounds. Throws UsageError once the episode is done.
  StepResult step(std::span<const double> action);

  std::size_t steps() const noexcept { return steps_; }
  bool done() const noexcept { return done_; }

  virtual std::optional<ReferenceReturns> reference_returns() const { return std::nullopt; }
  virtual std::unique_ptr<Env> clone() const = 0;

 protected:
  explicit Env(EnvSpec spec) : spec_(std::move(spec)) {}

  struct Outcome {
    std::vector<double> state;
    double reward = 0.0;
    bool terminal = false;
  };
  virtual std::vector<double> initial_state(Rng& rng) = 0;
  virtual Outcome transition(std::span<const double> clipped_action) = 0;

 private:
  EnvSpec spec_;
  std::size_t steps_ = 0;
  bool done_ = true;
  bool started_ = false;
  std::vector<double> scratch_;
};

class PointNav2D final : public Env {
 public:
  static constexpr double kStepScale = 0.05;
  static constexpr double kArena = 2.0;
  static constexpr std::size_t kMaxSteps = 200;

  PointNav2D();

  std::optional<ReferenceReturns> reference_returns() const override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<PointNav2D>(*this); }

  /// Closed-form optimal return from a start/goal pair.
  static double optimal_return(double px, double py, double gx, double gy);

 protected:
  std::vector<double> initial_state(Rng& rng) override;
  Outcome transition(std::span<const double> a) override;

 private:
  double px_ = 0.0, py_ = 0.0, gx_ = 0.0, gy_ = 0.0;
  double start_x_ = 0.0, start_y_ = 0.0;
};

struct DelayedChainParams {
  double step_scale = 0.02;
  double move_cost = 0.1;
  double goal_bonus = 100.0;
  double start_jitter = 0.1;
  std::size_t max_steps = 64;
};

class DelayedChain final : public Env {
 public:
  explicit DelayedChain(DelayedChainParams params = {});

  std::optional<ReferenceReturns> reference_returns() const override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<DelayedChain>(*this); }

  const DelayedChainParams& params() const noexcept { return params_; }
  double position() const noexcept { return x_; }
  /// Closed-form optimal return from start position x0.
  double optimal_return(double x0) const;

 protected:
  std::vector<double> initial_state(Rng& rng) override;
  Outcome transition(std::span<const double> a) override;

 private:
  DelayedChainParams params_;
  double x_ = 0.0;
  double start_ = 0.0;
};

class NoisyPendulum final : public Env {
 public:
  static constexpr double kDt = 0.05;
  static constexpr double kGravity = 10.0;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;
  static constexpr double kObservationNoise = 0.02;

  NoisyPendulum();
  std::unique_ptr<Env> clone() const override { return std::make_unique<NoisyPendulum>(*this); }

 protected:
  std::vector<double> initial_state(Rng& rng) override;
  Outcome transition(std::span<const double> a) override;

 private:
  std::vector<double> observe();
  double theta_ = 0.0;
  double omega_ = 0.0;
  Rng noise_;
};

/// "point_nav_2d", "delayed_chain" or "noisy_pendulum".
std::unique_ptr<Env> make_env(std::string_view name);
std::vector<std::string> env_names();

}  // namespace cerl
