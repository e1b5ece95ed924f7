#include "cerl/replay.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cerl/error.hpp"

namespace cerl {

namespace {

bool finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
  if (capacity == 0) throw ConfigError("replay capacity must be >= 1");
  if (state_dim == 0 || action_dim == 0) throw ConfigError("replay dimensions must be >= 1");
  states_.resize(capacity * state_dim);
  next_states_.resize(capacity * state_dim);
  actions_.resize(capacity * action_dim);
  rewards_.resize(capacity);
  dones_.resize(capacity);
}

void ReplayBuffer::push(const Transition& t) {
  if (t.state.size() != state_dim_ || t.next_state.size() != state_dim_ ||
      t.action.size() != action_dim_) {
    throw ShapeError("transition dims (" + std::to_string(t.state.size()) + ", " +
                     std::to_string(t.action.size()) + ") do not match buffer (" +
                     std::to_string(state_dim_) + ", " + std::to_string(action_dim_) + ")");
  }
  if (!finite(t.state) || !finite(t.next_state) || !finite(t.action) || !std::isfinite(t.reward)) {
    throw NumericError("non-finite transition");
  }
  std::copy(t.state.begin(), t.state.end(), states_.begin() + cursor_ * state_dim_);
  std::copy(t.next_state.begin(), t.next_state.end(), next_states_.begin() + cursor_ * state_dim_);
  std::copy(t.action.begin(), t.action.end(), actions_.begin() + cursor_ * action_dim_);
  rewards_[cursor_] = t.reward;
  dones_[cursor_] = t.done ? 1 : 0;
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size, Rng& rng) const {
  if (batch_size == 0) throw UsageError("minibatch size must be >= 1");
  if (size_ < batch_size) {
    throw InsufficientDataError("buffer holds " + std::to_string(size_) + " transitions, " +
                                std::to_string(batch_size) + " requested");
  }
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Minibatch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  const auto idx = sample_indices(batch_size, rng);
  Minibatch b;
  b.states = Matrix(batch_size, state_dim_);
  b.next_states = Matrix(batch_size, state_dim_);
  b.actions = Matrix(batch_size, action_dim_);
  b.rewards.resize(batch_size);
  b.dones.resize(batch_size);
  for (std::size_t t = 0; t < batch_size; ++t) {
    const std::size_t s = idx[t];
    std::copy_n(states_.begin() + s * state_dim_, state_dim_, b.states.row(t).begin());
    std::copy_n(next_states_.begin() + s * state_dim_, state_dim_, b.next_states.row(t).begin());
    std::copy_n(actions_.begin() + s * action_dim_, action_dim_, b.actions.row(t).begin());
    b.rewards[t] = rewards_[s];
    b.dones[t] = dones_[s] ? 1.0 : 0.0;
  }
  return b;
}

Transition ReplayBuffer::slot(std::size_t s) const {
  if (s >= size_) throw UsageError("replay slot " + std::to_string(s) + " is not live");
  Transition t;
  t.state.assign(states_.begin() + s * state_dim_, states_.begin() + (s + 1) * state_dim_);
  t.next_state.assign(next_states_.begin() + s * state_dim_,
                      next_states_.begin() + (s + 1) * state_dim_);
  t.action.assign(actions_.begin() + s * action_dim_, actions_.begin() + (s + 1) * action_dim_);
  t.reward = rewards_[s];
  t.done = dones_[s] != 0;
  return t;
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw UsageError("replay index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : cursor_;
  return slot((oldest + i) % capacity_);
}

}  // namespace cerl
