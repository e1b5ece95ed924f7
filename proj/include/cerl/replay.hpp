#pragma once

#include <cstddef>
#include <vector>

#include "cerl/matrix.hpp"
#include "cerl/rng.hpp"

namespace cerl {

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  // Terminal only; step-limit truncations are stored as not-done so the
  // critic keeps bootstrapping through them.
  bool done = false;

  bool operator==(const Transition&) const = default;
};

/// Column-form minibatch; row t of every field belongs to the same transition.
struct Minibatch {
  Matrix states;
  Matrix actions;
  std::vector<double> rewards;
  Matrix next_states;
  std::vector<double> dones;  // 1.0 for terminal, else 0.0

  std::size_t size() const noexcept { return rewards.size(); }
};

/// Fixed-capacity FIFO ring of transitions shared by every actor.
///
/// Not internally synchronized: rollout workers hand their episodes back to the
/// orchestrator, which pushes them in a fixed order between phases.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim);

  void push(const Transition& t);

  /// T transitions drawn uniformly with replacement from the live entries.
  Minibatch sample(std::size_t batch_size, Rng& rng) const;
  /// The slot indices `sample` would use; exposed for statistical tests.
  std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const;

  /// i-th live entry in insertion order (0 = oldest).
  Transition at(std::size_t i) const;
  /// Transition stored in physical slot `slot`.
  Transition slot(std::size_t slot) const;

  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t cursor() const noexcept { return cursor_; }
  std::size_t state_dim() const noexcept { return state_dim_; }
  std::size_t action_dim() const noexcept { return action_dim_; }

 private:
  std::size_t capacity_;
  std::size_t state_dim_;
  std::size_t action_dim_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  std::vector<double> states_;
  std::vector<double> actions_;
  std::vector<double> rewards_;
  std::vector<double> next_states_;
  std::vector<unsigned char> dones_;
};

}  // namespace cerl
