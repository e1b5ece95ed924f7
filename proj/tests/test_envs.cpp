#include "doctest.h"

#include <cmath>
#include <vector>

#include "cerl/error.hpp"
#include "cerl/envs.hpp"
#include "oracles.hpp"

using namespace cerl;

namespace {

std::vector<double> run_actions(Env& env, std::uint64_t seed, const std::vector<std::vector<double>>& actions) {
  Rng rng(seed);
  std::vector<double> trace = env.reset(rng);
  for (const auto& a : actions) {
    if (env.done()) break;
    const auto r = env.step(a);
    trace.insert(trace.end(), r.state.begin(), r.state.end());
    trace.push_back(r.reward);
  }
  return trace;
}

}  // namespace

TEST_CASE("factory and specs") {
  for (const auto& name : env_names()) {
    auto env = make_env(name);
    const EnvSpec& s = env->spec();
    CHECK(s.name == name);
    CHECK(s.bounds.dim() == s.action_dim);
    for (std::size_t i = 0; i < s.action_dim; ++i) CHECK(s.bounds.low[i] < s.bounds.high[i]);
    CHECK(s.max_steps >= 1);
    Rng rng(1);
    CHECK(env->reset(rng).size() == s.state_dim);
  }
  CHECK_THROWS_AS(make_env("hopper"), ConfigError);
}

TEST_CASE("seeded reset is deterministic") {
  for (const auto& name : env_names()) {
    auto a = make_env(name), b = make_env(name);
    Rng r1(77), r2(77);
    CHECK(a->reset(r1) == b->reset(r2));
  }
}

TEST_CASE("fixed seed and actions reproduce the trajectory") {
  Rng draw(3);
  std::vector<std::vector<double>> acts2, acts1;
  for (int i = 0; i < 250; ++i) {
    acts2.push_back({2 * uniform01(draw) - 1, 2 * uniform01(draw) - 1});
    acts1.push_back({2 * uniform01(draw) - 1});
  }
  PointNav2D n1, n2;
  CHECK(run_actions(n1, 5, acts2) == run_actions(n2, 5, acts2));
  DelayedChain c1, c2;
  CHECK(run_actions(c1, 5, acts1) == run_actions(c2, 5, acts1));
  NoisyPendulum p1, p2;
  CHECK(run_actions(p1, 5, acts1) == run_actions(p2, 5, acts1));
}

TEST_CASE("reset means match the documented distributions") {
  const int n = 10000;
  SUBCASE("PointNav2D: all four coordinates U[-1,1]") {
    PointNav2D env;
    Rng rng(4);
    std::vector<double> sum(4, 0.0);
    for (int i = 0; i < n; ++i) {
      const auto s = env.reset(rng);
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(std::abs(s[j]) <= 1.0);
        sum[j] += s[j];
      }
    }
    const double sd = std::sqrt(1.0 / 3.0 / n);
    for (double v : sum) CHECK(std::abs(v / n) < 4 * sd);
  }
  SUBCASE("DelayedChain: x0 ~ U[0, 0.1], state 2x - 1") {
    DelayedChain env;
    Rng rng(5);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = (env.reset(rng)[0] + 1.0) / 2.0;
      CHECK(x >= 0.0);
      CHECK(x <= 0.1);
      CHECK(env.position() == doctest::Approx(x));
      sum += x;
    }
    const double sd = 0.1 / std::sqrt(12.0 * n);
    CHECK(std::abs(sum / n - 0.05) < 4 * sd);
  }
  SUBCASE("NoisyPendulum: theta ~ U[-pi, pi] so E[cos] = E[sin] = 0, omega ~ U[-1,1]") {
    NoisyPendulum env;
    Rng rng(6);
    std::vector<double> sum(3, 0.0);
    for (int i = 0; i < n; ++i) {
      const auto s = env.reset(rng);
      for (std::size_t j = 0; j < 3; ++j) sum[j] += s[j];
    }
    // var cos = 1/2 (+ noise), var omega/8 = 1/192 (+ noise)
    CHECK(std::abs(sum[0] / n) < 4 * std::sqrt((0.5 + 4e-4) / n));
    CHECK(std::abs(sum[1] / n) < 4 * std::sqrt((0.5 + 4e-4) / n));
    CHECK(std::abs(sum[2] / n) < 4 * std::sqrt((1.0 / 192 + 4e-4) / n));
  }
}

TEST_CASE("PointNav2D zero action keeps the position and pays the distance") {
  PointNav2D env;
  Rng rng(7);
  const auto s0 = env.reset(rng);
  const auto r = env.step(std::vector<double>{0.0, 0.0});
  CHECK(r.state == s0);
  CHECK(r.reward == doctest::Approx(-std::hypot(s0[0] - s0[2], s0[1] - s0[3])).epsilon(1e-15));
  CHECK_FALSE(r.done());
}

TEST_CASE("PointNav2D clips actions and moves 0.05 per unit") {
  PointNav2D env;
  Rng rng(8);
  const auto s0 = env.reset(rng);
  const auto r = env.step(std::vector<double>{5.0, -0.5});
  CHECK(r.state[0] == doctest::Approx(s0[0] + 0.05));
  CHECK(r.state[1] == doctest::Approx(s0[1] - 0.025));
  CHECK_THROWS_AS(env.step(std::vector<double>{0.0}), ShapeError);
  CHECK_THROWS_AS(env.step(std::vector<double>{std::nan(""), 0.0}), NumericError);
}

TEST_CASE("step limit sets the truncation flag and later steps are usage errors") {
  PointNav2D env;
  CHECK_THROWS_AS(env.step(std::vector<double>{0.0, 0.0}), UsageError);
  Rng rng(9);
  env.reset(rng);
  StepResult r;
  for (std::size_t t = 0; t < PointNav2D::kMaxSteps; ++t) {
    REQUIRE_FALSE(env.done());
    r = env.step(std::vector<double>{0.3, -0.2});
  }
  CHECK(r.truncated);
  CHECK_FALSE(r.terminal);
  CHECK(env.done());
  CHECK(env.steps() == PointNav2D::kMaxSteps);
  CHECK_THROWS_AS(env.step(std::vector<double>{0.0, 0.0}), UsageError);
  env.reset(rng);
  CHECK(env.steps() == 0);
  CHECK_NOTHROW(env.step(std::vector<double>{0.0, 0.0}));
}

TEST_CASE("DelayedChain without move cost: 0 every step, +100 on the terminal step") {
  DelayedChainParams p;
  p.move_cost = 0.0;
  p.start_jitter = 0.0;
  DelayedChain env(p);
  Rng rng(10);
  CHECK(env.reset(rng)[0] == -1.0);
  std::vector<double> rewards;
  StepResult r;
  do {
    r = env.step(std::vector<double>{1.0});
    rewards.push_back(r.reward);
  } while (!r.done());
  CHECK(r.terminal);
  CHECK_FALSE(r.truncated);
  CHECK(rewards.size() == 50);
  for (std::size_t i = 0; i + 1 < rewards.size(); ++i) CHECK(rewards[i] == 0.0);
  CHECK(rewards.back() == 100.0);
  CHECK(r.state[0] == 1.0);
}

TEST_CASE("DelayedChain default costs: standing still scores 0, moving costs 0.1 |a|") {
  DelayedChain env;
  Rng rng(11);
  env.reset(rng);
  double total = 0.0;
  StepResult r;
  do {
    r = env.step(std::vector<double>{0.0});
    total += r.reward;
  } while (!r.done());
  CHECK(total == 0.0);
  CHECK(r.truncated);
  CHECK(env.steps() == 64);

  DelayedChainParams p;
  p.start_jitter = 0.0;
  DelayedChain wall(p);
  wall.reset(rng);
  CHECK(wall.step(std::vector<double>{-0.5}).reward == doctest::Approx(-0.05));
  CHECK(wall.position() == 0.0);  // clamped at the wall
}

TEST_CASE("PointNav2D closed-form optimum matches the simulated greedy policy") {
  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    const double px = 2 * uniform01(rng) - 1, py = 2 * uniform01(rng) - 1;
    const double gx = 2 * uniform01(rng) - 1, gy = 2 * uniform01(rng) - 1;
    CHECK(PointNav2D::optimal_return(px, py, gx, gy) ==
          doctest::Approx(oracle::point_nav_greedy_return(px, py, gx, gy)).epsilon(1e-9));
  }
}

TEST_CASE("PointNav2D: no random policy beats the optimum and the baseline is zero-action") {
  PointNav2D env;
  Rng rng(13);
  for (int ep = 0; ep < 50; ++ep) {
    env.reset(rng);
    const auto ref = *env.reference_returns();
    double total = 0.0;
    StepResult r;
    do {
      r = env.step(std::vector<double>{2 * uniform01(rng) - 1, 2 * uniform01(rng) - 1});
      total += r.reward;
    } while (!r.done());
    CHECK(total <= ref.optimal + 1e-9);
    CHECK(ref.normalize(ref.optimal) == doctest::Approx(1.0));
    CHECK(ref.normalize(ref.baseline) == doctest::Approx(0.0));
  }
  env.reset(rng);
  const auto ref = *env.reference_returns();
  double total = 0.0;
  for (std::size_t t = 0; t < PointNav2D::kMaxSteps; ++t) total += env.step(std::vector<double>{0.0, 0.0}).reward;
  CHECK(total == doctest::Approx(ref.baseline).epsilon(1e-12));
}

TEST_CASE("DelayedChain closed-form optimum matches lattice value iteration") {
  const DelayedChain env;
  const auto& p = env.params();
  const std::int64_t K = 4;
  for (std::int64_t m : {0, 1, 3, 7, 12, 20}) {
    const double x0 = static_cast<double>(m) * p.step_scale / static_cast<double>(K);
    const double dp = oracle::chain_value(m, K, p.goal_bonus, p.move_cost, p.step_scale, p.max_steps);
    CHECK(env.optimal_return(x0) == doctest::Approx(dp).epsilon(1e-9));
  }
  // too far to reach within the limit: the best is to stand still
  DelayedChainParams slow;
  slow.step_scale = 0.01;
  const DelayedChain far(slow);
  CHECK(far.optimal_return(0.0) == 0.0);
  CHECK(oracle::chain_value(0, K, slow.goal_bonus, slow.move_cost, slow.step_scale, slow.max_steps) == 0.0);
}

TEST_CASE("the full-speed chain policy attains the closed-form optimum") {
  DelayedChain env;
  Rng rng(14);
  for (int ep = 0; ep < 20; ++ep) {
    env.reset(rng);
    const auto ref = *env.reference_returns();
    double total = 0.0;
    StepResult r;
    do {
      r = env.step(std::vector<double>{1.0});
      total += r.reward;
    } while (!r.done());
    CHECK(r.terminal);
    // full speed pays for the whole final step too; the optimum slows the last move
    CHECK(total <= ref.optimal + 1e-9);
    CHECK(total >= ref.optimal - 0.1 - 1e-9);
  }
}

TEST_CASE("every emitted reward stays within the documented bounds") {
  for (const auto& name : env_names()) {
    auto env = make_env(name);
    const auto& s = env->spec();
    Rng rng(15);
    for (int ep = 0; ep < 30; ++ep) {
      env->reset(rng);
      StepResult r;
      do {
        std::vector<double> a(s.action_dim);
        for (double& v : a) v = 3 * gaussian(rng);
        r = env->step(a);
        CHECK(r.reward >= s.reward_low);
        CHECK(r.reward <= s.reward_high);
      } while (!r.done());
    }
  }
}

TEST_CASE("clone continues the same episode") {
  PointNav2D env;
  Rng rng(16);
  env.reset(rng);
  env.step(std::vector<double>{0.5, 0.5});
  auto copy = env.clone();
  const auto a = env.step(std::vector<double>{-1.0, 0.2});
  const auto b = copy->step(std::vector<double>{-1.0, 0.2});
  CHECK(a.state == b.state);
  CHECK(a.reward == b.reward);
  CHECK(copy->steps() == 2);
}
