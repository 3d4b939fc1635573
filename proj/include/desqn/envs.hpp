#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "desqn/numerics.hpp"

namespace desqn {

enum class Task { cartpole, mountaincar, acrobot, pendulum };

std::string_view to_string(Task task) noexcept;
Task parse_task(std::string_view name);
inline constexpr std::array<Task, 4> kAllTasks{Task::cartpole, Task::mountaincar, Task::acrobot,
                                               Task::pendulum};

struct EnvSpec {
  Task task;
  std::size_t n_obs;
  std::size_t n_actions;
  std::size_t max_steps;
};

struct StepResult {
  Vector observation;
  double reward = 0.0;  // clipped: -1, 0 or 1
  bool terminal = false;
  std::size_t steps_elapsed = 0;
};

/// Switches for the readings of the task definitions that admit more than one.
struct EnvOptions {
  std::size_t mountaincar_actions = 3;  // 3: left/none/right, 2: left/right
  std::size_t acrobot_actions = 2;      // 2: torque -1/+1, 3: adds zero torque
  std::size_t pendulum_success_window = 50;

  void validate() const;
};

/// Partially observable control task: velocities are hidden, observations are
/// normalised to [-1, 1], rewards are clipped. Episodes last at most 200 steps
/// and time-limit ends are reported as terminal.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const noexcept = 0;
  virtual Vector reset(SeededRng& rng) = 0;
  virtual StepResult step(std::size_t action) = 0;
  /// Whether the finished episode counts as a completion of the task.
  virtual bool task_completed() const noexcept = 0;
  virtual bool terminal() const noexcept = 0;
  virtual std::size_t steps_elapsed() const noexcept = 0;
};

// Hidden physical state of each task.
struct CartPoleState {
  double x = 0, x_dot = 0, theta = 0, theta_dot = 0;
  friend bool operator==(const CartPoleState&, const CartPoleState&) = default;
};
struct MountainCarState {
  double position = 0, velocity = 0;
  friend bool operator==(const MountainCarState&, const MountainCarState&) = default;
};
struct AcrobotState {
  double theta1 = 0, theta2 = 0, theta1_dot = 0, theta2_dot = 0;
  friend bool operator==(const AcrobotState&, const AcrobotState&) = default;
};
struct PendulumState {
  double theta = 0, theta_dot = 0;  // theta measured from upright
  friend bool operator==(const PendulumState&, const PendulumState&) = default;
};

/// Shared episode bookkeeping for the concrete tasks. Derived classes provide
///   static State advance(const State&, double control)
///   static Vector observe(const State&)
///   double control(std::size_t action) const
///   double clipped_reward(const State& before, const State& after, double control)
///   bool reached_goal(const State&) const
template <class Derived, class StateT>
class ControlTask : public Environment {
 public:
  using State = StateT;

  explicit ControlTask(EnvSpec spec) : spec_(spec) {}

  const EnvSpec& spec() const noexcept override { return spec_; }
  bool terminal() const noexcept override { return terminal_; }
  std::size_t steps_elapsed() const noexcept override { return steps_; }
  const State& state() const noexcept { return state_; }

  /// Places the task in `s` with a fresh episode clock.
  Vector set_state(const State& s) {
    state_ = s;
    steps_ = 0;
    terminal_ = false;
    static_cast<Derived*>(this)->on_episode_start();
    return Derived::observe(state_);
  }

  StepResult step(std::size_t action) override;

  /// Steps the current episode through `actions`, stopping early at a
  /// terminal step. Returns the visited states, starting with the current one.
  std::vector<State> reference_trajectory(std::span<const std::size_t> actions);

 protected:
  void check_action(std::size_t action) const;

  EnvSpec spec_;
  State state_{};
  std::size_t steps_ = 0;
  bool terminal_ = false;
};

class CartPole final : public ControlTask<CartPole, CartPoleState> {
 public:
  CartPole();

  Vector reset(SeededRng& rng) override;
  bool task_completed() const noexcept override;

  static State advance(const State& s, double force);
  static Vector observe(const State& s);
  double control(std::size_t action) const noexcept;
  double clipped_reward(const State& before, const State& after, double control) const noexcept;
  bool reached_goal(const State&) const noexcept { return false; }
  static bool failed(const State& s) noexcept;
  void on_episode_start() noexcept {}
};

class MountainCar final : public ControlTask<MountainCar, MountainCarState> {
 public:
  explicit MountainCar(std::size_t n_actions = 3);

  Vector reset(SeededRng& rng) override;
  bool task_completed() const noexcept override { return terminal_ && reached_goal(state_); }

  static State advance(const State& s, double push);
  static Vector observe(const State& s);
  double control(std::size_t action) const noexcept;
  double clipped_reward(const State& before, const State& after, double control) const noexcept;
  bool reached_goal(const State& s) const noexcept;
  void on_episode_start() noexcept {}
};

class Acrobot final : public ControlTask<Acrobot, AcrobotState> {
 public:
  explicit Acrobot(std::size_t n_actions = 2);

  Vector reset(SeededRng& rng) override;
  bool task_completed() const noexcept override { return terminal_ && reached_goal(state_); }

  static State advance(const State& s, double torque);
  static Vector observe(const State& s);
  static double tip_height(const State& s) noexcept;
  double control(std::size_t action) const noexcept;
  double clipped_reward(const State& before, const State& after, double control) const noexcept;
  bool reached_goal(const State& s) const noexcept;
  void on_episode_start() noexcept {}
};

class Pendulum final : public ControlTask<Pendulum, PendulumState> {
 public:
  explicit Pendulum(std::size_t success_window = 50);

  Vector reset(SeededRng& rng) override;
  /// Completed when the last `success_window` steps all earned +1.
  bool task_completed() const noexcept override;

  static State advance(const State& s, double torque);
  static Vector observe(const State& s);
  /// Unclipped task reward for taking `torque` in `s`.
  static double raw_reward(const State& s, double torque) noexcept;
  double control(std::size_t action) const noexcept;
  double clipped_reward(const State& before, const State& after, double control) noexcept;
  bool reached_goal(const State&) const noexcept { return false; }
  void on_episode_start() noexcept { positive_run_ = 0; }

 private:
  std::size_t success_window_;
  std::size_t positive_run_ = 0;
};

/// Wraps an angle into [-pi, pi).
double normalize_angle(double theta) noexcept;

EnvSpec default_spec(Task task, const EnvOptions& options = {});
std::unique_ptr<Environment> make_env(Task task, const EnvOptions& options = {});

// ---------------------------------------------------------------------------

template <class Derived, class StateT>
void ControlTask<Derived, StateT>::check_action(std::size_t action) const {
  if (terminal_) throw Error(Errc::step_after_terminal, "episode already finished; call reset");
  if (action >= spec_.n_actions) throw Error(Errc::invalid_action, "action index out of range");
}

template <class Derived, class StateT>
StepResult ControlTask<Derived, StateT>::step(std::size_t action) {
  check_action(action);
  auto& self = *static_cast<Derived*>(this);
  const double u = self.control(action);
  const State before = state_;
  state_ = Derived::advance(before, u);
  ++steps_;
  const bool goal = self.reached_goal(state_);
  terminal_ = goal || steps_ >= spec_.max_steps;
  if constexpr (requires { Derived::failed(state_); }) terminal_ = terminal_ || Derived::failed(state_);
  StepResult out;
  out.reward = self.clipped_reward(before, state_, u);
  out.observation = Derived::observe(state_);
  out.terminal = terminal_;
  out.steps_elapsed = steps_;
  return out;
}

template <class Derived, class StateT>
std::vector<StateT> ControlTask<Derived, StateT>::reference_trajectory(
    std::span<const std::size_t> actions) {
  std::vector<State> states{state_};
  for (std::size_t a : actions) {
    if (terminal_) break;
    step(a);
    states.push_back(state_);
  }
  return states;
}

}  // namespace desqn
