#include "desqn/replay.hpp"

#include <string>

namespace desqn {

void validate_transition(const Transition& t) {
  if (t.r != -1.0 && t.r != 0.0 && t.r != 1.0)
    throw Error(Errc::invalid_transition, "reward must be -1, 0 or 1, got " + std::to_string(t.r));
  if (t.o.size() != t.o_next.size() || t.x.size() != t.x_next.size())
    throw Error(Errc::invalid_transition, "paired observation/state lengths differ");
}

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(Errc::invalid_config, "replay capacity must be >= 1");
  items_.reserve(capacity);
}

void ReplayMemory::push(const Transition& t) {
  validate_transition(t);
  if (!items_.empty() && (t.o.size() != items_.front().o.size() ||
                          t.x.size() != items_.front().x.size()))
    throw Error(Errc::invalid_transition, "transition shape differs from stored transitions");
  if (items_.size() < capacity_) {
    items_.push_back(t);
    return;
  }
  items_[head_] = t;
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayMemory::at(std::size_t i) const {
  if (i >= items_.size()) throw Error(Errc::insufficient_data, "replay index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<std::size_t> ReplayMemory::sample_indices(std::size_t n, SeededRng& rng) const {
  if (items_.size() < n || items_.empty())
    throw Error(Errc::insufficient_data, "replay holds " + std::to_string(items_.size()) +
                                             " transitions, " + std::to_string(n) + " requested");
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = static_cast<std::size_t>(rng.uniform_index(items_.size()));
  return out;
}

std::vector<Transition> ReplayMemory::sample(std::size_t n, SeededRng& rng) const {
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i : sample_indices(n, rng)) out.push_back(at(i));
  return out;
}

}  // namespace desqn
