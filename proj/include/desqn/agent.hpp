#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "desqn/envs.hpp"
#include "desqn/numerics.hpp"
#include "desqn/optim.hpp"
#include "desqn/readout.hpp"
#include "desqn/replay.hpp"
#include "desqn/reservoir.hpp"

namespace desqn {

struct AgentConfig {
  double gamma = 0.99;
  double epsilon_start = 0.5;
  double epsilon_floor = 0.01;
  std::size_t epsilon_decay_episodes = 400;
  std::size_t batch_size = 256;
  std::size_t memory_capacity = 10000;
  std::size_t target_sync_every = 2;
  std::size_t max_episodes = 500;
  std::size_t success_streak = 10;
  bool reset_reservoir_each_episode = true;

  ReadoutKind readout = ReadoutKind::mlp;
  std::size_t hidden_units = 250;
  std::size_t n_actions = 2;
  OptimConfig optimizer;
  ReservoirConfig reservoir;
  EnvOptions env;

  /// Per-task defaults: reservoir input width, learning rate.
  static AgentConfig defaults(Task task, ReadoutKind readout = ReadoutKind::mlp);
  /// Sets the observation width and action count from the task and env options.
  void bind_task(Task task);

  /// Per-episode multiplicative decay, (floor / start)^(1 / decay_episodes).
  double epsilon_decay() const;
  /// Exploration rate after `episodes` finished episodes.
  double epsilon_after(std::size_t episodes) const;

  void validate() const;
};

/// Learning rate used when none is given explicitly.
double default_learning_rate(Task task, ReadoutKind readout);

/// Independent random streams of one training run, all derived from a single
/// master seed.
struct RunStreams {
  SeededRng reservoir;
  SeededRng readout;
  SeededRng exploration;
  SeededRng replay;
  SeededRng environment;

  static RunStreams from_seed(std::uint64_t master_seed);
};

struct EpisodeReport {
  std::size_t episode = 0;  // 1-based
  std::size_t steps = 0;
  double total_reward = 0.0;
  double epsilon = 0.0;  // exploration rate in effect during the episode
  double loss_mean = 0.0;  // NaN when no training step ran
  std::size_t train_steps = 0;
  bool completed = false;

  // Two missing losses (NaN) compare equal.
  friend bool operator==(const EpisodeReport& a, const EpisodeReport& b) {
    const bool same_loss = a.loss_mean == b.loss_mean || (std::isnan(a.loss_mean) && std::isnan(b.loss_mean));
    return a.episode == b.episode && a.steps == b.steps && a.total_reward == b.total_reward &&
           a.epsilon == b.epsilon && same_loss && a.train_steps == b.train_steps && a.completed == b.completed;
  }
};

struct RunReport {
  std::vector<EpisodeReport> episodes;
  bool success = false;
  std::optional<std::size_t> success_episode;
};

/// Echo-state Q-network agent: a fixed reservoir feeds a trained readout
/// that maps (observation, reservoir state) to Q-values. Learning is Double
/// DQN over uniformly replayed transitions.
class Agent {
 public:
  Agent(const AgentConfig& cfg, std::uint64_t master_seed);
  /// Explicit components, for tests and custom setups.
  Agent(const AgentConfig& cfg, Reservoir reservoir, Readout main_net, RunStreams streams);

  const AgentConfig& config() const noexcept { return cfg_; }

  /// Steps the reservoir with observation o and returns the new state.
  std::span<const double> observe(std::span<const double> o);
  /// Epsilon-greedy over Q(o, x) of the main network; ties go to the lowest index.
  std::size_t select_action(std::span<const double> o, std::span<const double> x);
  /// observe then select_action; returns the action and a copy of x.
  std::pair<std::size_t, Vector> act(std::span<const double> o);

  Vector q_values(std::span<const double> o, std::span<const double> x) const;

  /// Double DQN targets: r for terminal transitions, otherwise
  /// r + gamma * Q_target(s', argmax_a Q_main(s', a)).
  Vector compute_targets(std::span<const Transition> batch);
  /// Samples batch_size transitions and takes one optimizer step on the main
  /// network. Returns nullopt while the memory holds fewer than batch_size.
  std::optional<double> train_step();

  EpisodeReport run_episode(Environment& env);
  using EpisodeCallback = std::function<void(const EpisodeReport&)>;
  RunReport run_training(Environment& env, const EpisodeCallback& on_episode = {});

  /// Copies the main network into the target network.
  void sync_target();

  double epsilon() const noexcept { return epsilon_; }
  void set_epsilon(double eps);
  std::size_t episodes_done() const noexcept { return episode_; }
  std::size_t streak() const noexcept { return streak_; }

  Reservoir& reservoir() noexcept { return reservoir_; }
  Readout& main_net() noexcept { return main_; }
  Readout& target_net() noexcept { return target_; }
  const Readout& main_net() const noexcept { return main_; }
  const Readout& target_net() const noexcept { return target_; }
  ReplayMemory& memory() noexcept { return memory_; }
  const Optimizer& optimizer() const noexcept { return optim_; }
  RunStreams& streams() noexcept { return streams_; }

 private:
  Agent(const AgentConfig& cfg, std::tuple<Reservoir, Readout, RunStreams>&& parts);

  void fill_input(std::span<double> row, std::span<const double> o, std::span<const double> x) const;
  void targets_for(std::span<const Transition* const> batch, Vector& out);

  AgentConfig cfg_;
  RunStreams streams_;
  Reservoir reservoir_;
  Readout main_;
  Readout target_;
  Optimizer optim_;
  ReplayMemory memory_;

  double epsilon_;
  std::size_t episode_ = 0;
  std::size_t streak_ = 0;

  // Reused per-step buffers.
  Vector input_;
  Vector q_;
  Vector scratch_;
  std::vector<const Transition*> picked_;
  Matrix next_inputs_;
  ReadoutWorkspace ws_main_;
  ReadoutWorkspace ws_target_;
  TrainingBatch batch_;
  GradientSet grads_;
};

}  // namespace desqn
