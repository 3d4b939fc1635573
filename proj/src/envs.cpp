#include "desqn/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "desqn/env_constants.hpp"

namespace desqn {

namespace c = constants;
using std::numbers::pi;

std::string_view to_string(Task task) noexcept {
  switch (task) {
    case Task::cartpole: return "cartpole";
    case Task::mountaincar: return "mountaincar";
    case Task::acrobot: return "acrobot";
    case Task::pendulum: return "pendulum";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  for (Task t : kAllTasks)
    if (to_string(t) == name) return t;
  throw Error(Errc::unknown_task, "unknown task '" + std::string(name) + "'");
}

void EnvOptions::validate() const {
  if (mountaincar_actions != 2 && mountaincar_actions != 3)
    throw Error(Errc::invalid_config, "mountaincar_actions must be 2 or 3");
  if (acrobot_actions != 2 && acrobot_actions != 3)
    throw Error(Errc::invalid_config, "acrobot_actions must be 2 or 3");
  if (pendulum_success_window == 0 || pendulum_success_window > c::kMaxSteps)
    throw Error(Errc::invalid_config, "pendulum_success_window must be in [1, 200]");
}

double normalize_angle(double theta) noexcept {
  double r = std::fmod(theta + pi, 2.0 * pi);
  if (r < 0) r += 2.0 * pi;
  return r - pi;
}

EnvSpec default_spec(Task task, const EnvOptions& options) {
  const std::size_t steps = c::kMaxSteps;
  switch (task) {
    case Task::cartpole: return {task, 2, 2, steps};
    case Task::mountaincar: return {task, 1, options.mountaincar_actions, steps};
    case Task::acrobot: return {task, 4, options.acrobot_actions, steps};
    case Task::pendulum: return {task, 2, 2, steps};
  }
  throw Error(Errc::unknown_task, "unknown task");
}

std::unique_ptr<Environment> make_env(Task task, const EnvOptions& options) {
  options.validate();
  switch (task) {
    case Task::cartpole: return std::make_unique<CartPole>();
    case Task::mountaincar: return std::make_unique<MountainCar>(options.mountaincar_actions);
    case Task::acrobot: return std::make_unique<Acrobot>(options.acrobot_actions);
    case Task::pendulum: return std::make_unique<Pendulum>(options.pendulum_success_window);
  }
  throw Error(Errc::unknown_task, "unknown task");
}

// CartPole -------------------------------------------------------------------

CartPole::CartPole() : ControlTask(default_spec(Task::cartpole)) {}

Vector CartPole::reset(SeededRng& rng) {
  const double h = c::cartpole::init_half_range;
  State s;
  s.x = rng.uniform(-h, h);
  s.x_dot = rng.uniform(-h, h);
  s.theta = rng.uniform(-h, h);
  s.theta_dot = rng.uniform(-h, h);
  return set_state(s);
}

CartPole::State CartPole::advance(const State& s, double force) {
  using namespace c::cartpole;
  constexpr double total_mass = mass_cart + mass_pole;
  constexpr double polemass_length = mass_pole * half_length;
  const double cos_t = std::cos(s.theta);
  const double sin_t = std::sin(s.theta);
  const double temp = (force + polemass_length * s.theta_dot * s.theta_dot * sin_t) / total_mass;
  const double theta_acc = (gravity * sin_t - cos_t * temp) /
                           (half_length * (4.0 / 3.0 - mass_pole * cos_t * cos_t / total_mass));
  const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;
  State n;
  n.x = s.x + tau * s.x_dot;
  n.x_dot = s.x_dot + tau * x_acc;
  n.theta = s.theta + tau * s.theta_dot;
  n.theta_dot = s.theta_dot + tau * theta_acc;
  return n;
}

Vector CartPole::observe(const State& s) {
  return {s.x / c::cartpole::obs_x_scale, s.theta / c::cartpole::obs_theta_scale};
}

double CartPole::control(std::size_t action) const noexcept {
  return action == 1 ? c::cartpole::force_mag : -c::cartpole::force_mag;
}

bool CartPole::failed(const State& s) noexcept {
  return s.x < -c::cartpole::x_threshold || s.x > c::cartpole::x_threshold ||
         s.theta < -c::cartpole::theta_threshold || s.theta > c::cartpole::theta_threshold;
}

double CartPole::clipped_reward(const State&, const State&, double) const noexcept {
  if (!terminal_) return 0.0;
  return task_completed() ? 1.0 : -1.0;
}

bool CartPole::task_completed() const noexcept {
  return terminal_ && steps_ > static_cast<std::size_t>(c::cartpole::success_steps);
}

// MountainCar ----------------------------------------------------------------

MountainCar::MountainCar(std::size_t n_actions)
    : ControlTask([&] {
        EnvOptions o;
        o.mountaincar_actions = n_actions;
        o.validate();
        return default_spec(Task::mountaincar, o);
      }()) {}

Vector MountainCar::reset(SeededRng& rng) {
  State s;
  s.position = rng.uniform(c::mountaincar::init_low, c::mountaincar::init_high);
  s.velocity = 0.0;
  return set_state(s);
}

MountainCar::State MountainCar::advance(const State& s, double push) {
  using namespace c::mountaincar;
  State n = s;
  n.velocity += push * force + std::cos(3.0 * s.position) * (-gravity);
  n.velocity = std::clamp(n.velocity, -max_speed, max_speed);
  n.position += n.velocity;
  n.position = std::clamp(n.position, min_position, max_position);
  if (n.position == min_position && n.velocity < 0) n.velocity = 0.0;
  return n;
}

Vector MountainCar::observe(const State& s) {
  return {(s.position + c::mountaincar::obs_offset) / c::mountaincar::obs_scale};
}

double MountainCar::control(std::size_t action) const noexcept {
  if (spec_.n_actions == 2) return action == 1 ? 1.0 : -1.0;
  return static_cast<double>(action) - 1.0;
}

bool MountainCar::reached_goal(const State& s) const noexcept {
  return s.position >= c::mountaincar::goal_position && s.velocity >= c::mountaincar::goal_velocity;
}

double MountainCar::clipped_reward(const State&, const State& after, double) const noexcept {
  return reached_goal(after) ? 1.0 : -1.0;
}

// Acrobot --------------------------------------------------------------------

namespace {

// Time derivative of (theta1, theta2, dtheta1, dtheta2) for the book dynamics.
std::array<double, 4> acrobot_derivs(const std::array<double, 4>& s, double torque) {
  using namespace c::acrobot;
  constexpr double m1 = link_mass_1, m2 = link_mass_2, l1 = link_length_1;
  constexpr double lc1 = link_com_1, lc2 = link_com_2, i1 = link_moi, i2 = link_moi;
  const double th1 = s[0], th2 = s[1], dth1 = s[2], dth2 = s[3];
  const double d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2 * l1 * lc2 * std::cos(th2)) + i1 + i2;
  const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(th2)) + i2;
  const double phi2 = m2 * lc2 * gravity * std::cos(th1 + th2 - pi / 2.0);
  const double phi1 = -m2 * l1 * lc2 * dth2 * dth2 * std::sin(th2) -
                      2 * m2 * l1 * lc2 * dth2 * dth1 * std::sin(th2) +
                      (m1 * lc1 + m2 * l1) * gravity * std::cos(th1 - pi / 2.0) + phi2;
  const double ddth2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dth1 * dth1 * std::sin(th2) - phi2) /
                       (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
  const double ddth1 = -(d2 * ddth2 + phi1) / d1;
  return {dth1, dth2, ddth1, ddth2};
}

double wrap(double x, double lo, double hi) {
  const double span = hi - lo;
  while (x > hi) x -= span;
  while (x < lo) x += span;
  return x;
}

}  // namespace

Acrobot::Acrobot(std::size_t n_actions)
    : ControlTask([&] {
        EnvOptions o;
        o.acrobot_actions = n_actions;
        o.validate();
        return default_spec(Task::acrobot, o);
      }()) {}

Vector Acrobot::reset(SeededRng& rng) {
  const double h = c::acrobot::init_half_range;
  State s;
  s.theta1 = rng.uniform(-h, h);
  s.theta2 = rng.uniform(-h, h);
  s.theta1_dot = rng.uniform(-h, h);
  s.theta2_dot = rng.uniform(-h, h);
  return set_state(s);
}

Acrobot::State Acrobot::advance(const State& s, double torque) {
  using Arr = std::array<double, 4>;
  const double dt = c::acrobot::dt;
  const Arr y0{s.theta1, s.theta2, s.theta1_dot, s.theta2_dot};
  auto shifted = [](const Arr& y, const Arr& k, double h) {
    Arr out;
    for (int i = 0; i < 4; ++i) out[i] = y[i] + h * k[i];
    return out;
  };
  const Arr k1 = acrobot_derivs(y0, torque);
  const Arr k2 = acrobot_derivs(shifted(y0, k1, dt / 2.0), torque);
  const Arr k3 = acrobot_derivs(shifted(y0, k2, dt / 2.0), torque);
  const Arr k4 = acrobot_derivs(shifted(y0, k3, dt), torque);
  Arr y;
  for (int i = 0; i < 4; ++i) y[i] = y0[i] + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  State n;
  n.theta1 = wrap(y[0], -pi, pi);
  n.theta2 = wrap(y[1], -pi, pi);
  n.theta1_dot = std::clamp(y[2], -c::acrobot::max_vel_1, c::acrobot::max_vel_1);
  n.theta2_dot = std::clamp(y[3], -c::acrobot::max_vel_2, c::acrobot::max_vel_2);
  return n;
}

Vector Acrobot::observe(const State& s) {
  return {std::cos(s.theta1), std::sin(s.theta1), std::cos(s.theta2), std::sin(s.theta2)};
}

double Acrobot::tip_height(const State& s) noexcept {
  return -std::cos(s.theta1) - std::cos(s.theta1 + s.theta2);
}

double Acrobot::control(std::size_t action) const noexcept {
  const double t = c::acrobot::torque;
  if (spec_.n_actions == 2) return action == 1 ? t : -t;
  return (static_cast<double>(action) - 1.0) * t;
}

bool Acrobot::reached_goal(const State& s) const noexcept {
  return tip_height(s) > c::acrobot::goal_height;
}

double Acrobot::clipped_reward(const State&, const State& after, double) const noexcept {
  return reached_goal(after) ? 1.0 : -1.0;
}

// Pendulum -------------------------------------------------------------------

Pendulum::Pendulum(std::size_t success_window)
    : ControlTask(default_spec(Task::pendulum)), success_window_(success_window) {
  EnvOptions o;
  o.pendulum_success_window = success_window;
  o.validate();
}

Vector Pendulum::reset(SeededRng& rng) {
  State s;
  s.theta = rng.uniform(-pi, pi);
  const double h = c::pendulum::init_speed_half_range;
  s.theta_dot = rng.uniform(-h, h);
  return set_state(s);
}

Pendulum::State Pendulum::advance(const State& s, double torque) {
  using namespace c::pendulum;
  double thdot = s.theta_dot +
                 (3.0 * gravity / (2.0 * length) * std::sin(s.theta) +
                  3.0 / (mass * length * length) * torque) * dt;
  thdot = std::clamp(thdot, -max_speed, max_speed);
  return {s.theta + thdot * dt, thdot};
}

Vector Pendulum::observe(const State& s) { return {std::cos(s.theta), std::sin(s.theta)}; }

double Pendulum::raw_reward(const State& s, double torque) noexcept {
  using namespace c::pendulum;
  const double th = normalize_angle(s.theta);
  return -cost_theta * th * th - cost_theta_dot * s.theta_dot - cost_torque * torque * torque;
}

double Pendulum::control(std::size_t action) const noexcept {
  return action == 1 ? c::pendulum::torque : -c::pendulum::torque;
}

double Pendulum::clipped_reward(const State& before, const State&, double control) noexcept {
  const double r = raw_reward(before, control) <= c::pendulum::reward_threshold ? -1.0 : 1.0;
  positive_run_ = r > 0 ? positive_run_ + 1 : 0;
  return r;
}

bool Pendulum::task_completed() const noexcept {
  return terminal_ && positive_run_ >= success_window_;
}

}  // namespace desqn
