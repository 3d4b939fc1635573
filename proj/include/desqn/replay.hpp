#pragma once

#include <cstddef>
#include <vector>

#include "desqn/numerics.hpp"

namespace desqn {

/// One stored experience: observation and reservoir state before and after
/// the action. Rewards are already clipped to {-1, 0, 1}.
struct Transition {
  Vector o;
  Vector x;
  std::size_t a = 0;
  double r = 0.0;
  Vector o_next;
  Vector x_next;
  bool terminal = false;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Throws invalid_transition if the reward is outside the clip set or the
/// paired vectors differ in length.
void validate_transition(const Transition& t);

/// Fixed-capacity FIFO ring buffer with uniform sampling (with replacement).
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity = 10000);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }

  /// Copies `t`; when full, the oldest entry is overwritten.
  void push(const Transition& t);

  /// Storage index i = 0 is the oldest entry.
  const Transition& at(std::size_t i) const;

  /// n uniform draws with replacement. Throws insufficient_data if size() < n.
  std::vector<std::size_t> sample_indices(std::size_t n, SeededRng& rng) const;
  std::vector<Transition> sample(std::size_t n, SeededRng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<Transition> items_;
};

}  // namespace desqn
