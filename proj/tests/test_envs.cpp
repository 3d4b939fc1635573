#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "desqn/env_constants.hpp"
#include "desqn/envs.hpp"
#include "desqn/error.hpp"
#include "support/env_oracles.hpp"

using namespace desqn;
using std::numbers::pi;

namespace {

std::vector<std::size_t> random_actions(std::size_t n, std::size_t n_actions, SeededRng& rng) {
  std::vector<std::size_t> a(n);
  for (auto& x : a) x = rng.uniform_index(n_actions);
  return a;
}

std::vector<std::size_t> alternating(std::size_t n) {
  std::vector<std::size_t> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = i % 2;
  return a;
}

}  // namespace

TEST_CASE("task names and specs") {
  CHECK(parse_task("cartpole") == Task::cartpole);
  CHECK(parse_task("pendulum") == Task::pendulum);
  try {
    parse_task("breakout");
    FAIL("expected unknown_task");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unknown_task);
  }
  const std::map<Task, std::pair<std::size_t, std::size_t>> dims{
      {Task::cartpole, {2, 2}}, {Task::mountaincar, {1, 3}}, {Task::acrobot, {4, 2}}, {Task::pendulum, {2, 2}}};
  for (Task t : kAllTasks) {
    const EnvSpec s = default_spec(t);
    CHECK(s.n_obs == dims.at(t).first);
    CHECK(s.n_actions == dims.at(t).second);
    CHECK(s.max_steps == 200);
    auto env = make_env(t);
    CHECK(env->spec().task == t);
  }
  EnvOptions o;
  o.mountaincar_actions = 2;
  o.acrobot_actions = 3;
  CHECK(default_spec(Task::mountaincar, o).n_actions == 2);
  CHECK(default_spec(Task::acrobot, o).n_actions == 3);
  o.acrobot_actions = 4;
  CHECK_THROWS_AS(make_env(Task::acrobot, o), Error);
}

TEST_CASE("normalize_angle wraps into [-pi, pi)") {
  CHECK(normalize_angle(0.0) == 0.0);
  CHECK(normalize_angle(pi) == doctest::Approx(-pi));
  CHECK(normalize_angle(3 * pi / 2) == doctest::Approx(-pi / 2));
  CHECK(normalize_angle(-3 * pi / 2) == doctest::Approx(pi / 2));
  CHECK(normalize_angle(7.0) == doctest::Approx(7.0 - 2 * pi));
  SeededRng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-50, 50);
    const double w = normalize_angle(a);
    CHECK((w >= -pi && w < pi));
    CHECK(std::abs(std::sin(w) - std::sin(a)) < 1e-12);
    CHECK(std::abs(std::cos(w) - std::cos(a)) < 1e-12);
  }
}

TEST_CASE("observation maps") {
  CHECK(CartPole::observe({2.4, 0.0, 0.209, 0.0}) == Vector{0.5, 0.5});
  CHECK(MountainCar::observe({-0.3, 0.0})[0] == 0.0);
  CHECK(MountainCar::observe({0.6, 0.0})[0] == doctest::Approx(1.0));
  CHECK(MountainCar::observe({-1.2, 0.0})[0] == doctest::Approx(-1.0));
  SeededRng rng(2);
  for (int i = 0; i < 500; ++i) {
    const CartPoleState c{rng.uniform(-2.4, 2.4), rng.uniform(-3, 3), rng.uniform(-0.2, 0.2), rng.uniform(-3, 3)};
    const Vector oc = CartPole::observe(c);
    CHECK(oc == Vector{c.x / 4.8, c.theta / 0.418});
    const AcrobotState a{rng.uniform(-pi, pi), rng.uniform(-pi, pi), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    CHECK(Acrobot::observe(a) ==
          Vector{std::cos(a.theta1), std::sin(a.theta1), std::cos(a.theta2), std::sin(a.theta2)});
    const PendulumState p{rng.uniform(-pi, pi), rng.uniform(-8, 8)};
    CHECK(Pendulum::observe(p) == Vector{std::cos(p.theta), std::sin(p.theta)});
    const MountainCarState m{rng.uniform(-1.2, 0.6), 0.0};
    const double om = MountainCar::observe(m)[0];
    CHECK(om == (m.position + 0.3) / 0.9);
    CHECK((om >= -1.0 && om <= 1.0));
  }
}

TEST_CASE("reset distributions") {
  SeededRng rng(3);
  CartPole cp;
  MountainCar mc;
  Acrobot ac;
  Pendulum pd;
  for (int i = 0; i < 2000; ++i) {
    const Vector o = cp.reset(rng);
    CHECK(std::abs(o[0]) <= 0.05 / 4.8);
    CHECK(std::abs(o[1]) <= 0.05 / 0.418);
    const Vector m = mc.reset(rng);
    CHECK((m[0] >= -1.0 / 3.0 - 1e-15 && m[0] <= -1.0 / 9.0 + 1e-15));
    CHECK(mc.state().velocity == 0.0);
    ac.reset(rng);
    for (double v : {ac.state().theta1, ac.state().theta2, ac.state().theta1_dot, ac.state().theta2_dot})
      CHECK(std::abs(v) <= 0.1);
    pd.reset(rng);
    CHECK((pd.state().theta >= -pi && pd.state().theta < pi));
    CHECK(std::abs(pd.state().theta_dot) <= 1.0);
    CHECK(pd.steps_elapsed() == 0);
    CHECK(!pd.terminal());
  }
  SeededRng a(4), b(4);
  CartPole x, y;
  CHECK(x.reset(a) == y.reset(b));
  CHECK(x.state() == y.state());
}

TEST_CASE("pendulum reward at rest upright with unit torque") {
  CHECK(Pendulum::raw_reward({0.0, 0.0}, 1.0) == doctest::Approx(-0.0012).epsilon(1e-15));
  Pendulum p;
  p.set_state({0.0, 0.0});
  CHECK(p.step(1).reward == 1.0);
  // Literal linear angular-velocity term, angle normalised first.
  CHECK(Pendulum::raw_reward({2 * pi + 0.5, -2.0}, -1.0) ==
        doctest::Approx(-0.25 + 0.2 - 0.0012).epsilon(1e-12));
  p.set_state({pi, 0.0});
  CHECK(p.step(0).reward == -1.0);
}

TEST_CASE("acrobot hanging down earns -1") {
  CHECK(Acrobot::tip_height({0, 0, 0, 0}) == -2.0);
  Acrobot a;
  a.set_state({0, 0, 0, 0});
  const StepResult r = a.step(1);
  CHECK(r.reward == -1.0);
  CHECK(!r.terminal);
  CHECK(Acrobot::tip_height({pi, 0, 0, 0}) == doctest::Approx(2.0));
}

TEST_CASE("acrobot goal ends the episode with +1") {
  Acrobot a;
  a.set_state({pi, 0.0, 0.0, 0.0});
  const StepResult r = a.step(0);
  CHECK(r.reward == 1.0);
  CHECK(r.terminal);
  CHECK(a.task_completed());
}

TEST_CASE("mountaincar cannot climb by pushing right from rest") {
  MountainCar mc;
  mc.set_state({-0.5, 0.0});
  std::size_t steps = 0;
  StepResult r;
  do {
    r = mc.step(2);
    ++steps;
    CHECK(r.reward == -1.0);
  } while (!r.terminal);
  CHECK(steps == 200);
  CHECK(!mc.task_completed());

  MountainCarState s{-0.5, 0.0};
  double best = s.position;
  for (int t = 0; t < 200; ++t) {
    s = oracle::mountaincar(s, 1.0);
    best = std::max(best, s.position);
  }
  CHECK(best < 0.5);
}

TEST_CASE("mountaincar goal gives +1 and ends the episode") {
  MountainCar mc;
  mc.set_state({0.49, 0.05});
  const StepResult r = mc.step(2);
  CHECK(r.terminal);
  CHECK(r.reward == 1.0);
  CHECK(mc.task_completed());
  CHECK(r.observation[0] > (0.5 + 0.3) / 0.9 - 1e-12);
  MountainCar two(2);
  two.set_state({-0.5, 0.0});
  two.step(0);
  CHECK(two.state().velocity < 0.0);
}

TEST_CASE("mountaincar left wall is inelastic") {
  MountainCar mc;
  mc.set_state({-1.19, -0.07});
  mc.step(0);
  CHECK(mc.state().position == -1.2);
  CHECK(mc.state().velocity == 0.0);
}

TEST_CASE("cartpole rewards: 0 until the end, then +1 only beyond 195 steps") {
  CartPole cp;
  cp.set_state({0.0, 0.0, 0.0, 0.0});
  StepResult r;
  std::size_t steps = 0;
  do {
    // Balance with a simple controller on the hidden state.
    const auto& s = cp.state();
    r = cp.step(s.theta + 0.5 * s.theta_dot + 0.01 * s.x + 0.05 * s.x_dot > 0 ? 1 : 0);
    ++steps;
    if (!r.terminal) CHECK(r.reward == 0.0);
  } while (!r.terminal);
  CHECK(steps == 200);
  CHECK(r.reward == 1.0);
  CHECK(cp.task_completed());

  cp.set_state({0.0, 0.0, 0.0, 0.0});
  steps = 0;
  do {
    r = cp.step(1);
    ++steps;
  } while (!r.terminal);
  CHECK(steps < 196);
  CHECK(r.reward == -1.0);
  CHECK(!cp.task_completed());

  // Failing exactly at the threshold counts by survived steps only.
  cp.set_state({2.39, 5.0, 0.0, 0.0});
  r = cp.step(1);
  CHECK(r.terminal);
  CHECK(r.reward == -1.0);
}

TEST_CASE("step errors") {
  CartPole cp;
  SeededRng rng(5);
  cp.reset(rng);
  try {
    cp.step(2);
    FAIL("expected invalid_action");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_action);
  }
  MountainCar mc;
  mc.set_state({-0.5, 0});
  while (!mc.step(1).terminal) {
  }
  try {
    mc.step(1);
    FAIL("expected step_after_terminal");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::step_after_terminal);
  }
}

TEST_CASE("clipped rewards, episode length and determinism over random play") {
  for (Task task : kAllTasks) {
    auto env = make_env(task);
    auto twin = make_env(task);
    SeededRng rng(10), twin_rng(10), act(11);
    std::set<double> seen;
    std::size_t total = 0;
    while (total < 10000) {
      const Vector o1 = env->reset(rng);
      const Vector o2 = twin->reset(twin_rng);
      REQUIRE(o1 == o2);
      StepResult r;
      do {
        const std::size_t a = act.uniform_index(env->spec().n_actions);
        r = env->step(a);
        const StepResult r2 = twin->step(a);
        CHECK(r.observation == r2.observation);
        CHECK(r.reward == r2.reward);
        CHECK(r.terminal == r2.terminal);
        seen.insert(r.reward);
        CHECK((r.reward == -1.0 || r.reward == 0.0 || r.reward == 1.0));
        for (double v : r.observation) CHECK((v >= -1.0 && v <= 1.0));
        CHECK(r.steps_elapsed <= 200);
        ++total;
      } while (!r.terminal);
    }
    CAPTURE(to_string(task));
    CHECK(!seen.empty());
  }
}

TEST_CASE("per-step dynamics match independent oracles") {
  SeededRng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto acts = trial == 0 ? alternating(200) : random_actions(200, 2, rng);
    const CartPoleState c0{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                           rng.uniform(-0.05, 0.05)};
    CHECK(oracle::max_step_deviation(c0, acts, CartPole::advance, oracle::cartpole,
                                     oracle::cartpole_force) < 1e-10);

    const auto mc_acts = random_actions(200, 3, rng);
    const MountainCarState m0{rng.uniform(-0.6, -0.4), 0.0};
    CHECK(oracle::max_step_deviation(m0, mc_acts, MountainCar::advance, oracle::mountaincar,
                                     oracle::mountaincar_push) < 1e-10);

    const AcrobotState a0{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                          rng.uniform(-0.1, 0.1)};
    CHECK(oracle::max_step_deviation(a0, acts, Acrobot::advance, oracle::acrobot,
                                     oracle::acrobot_torque) < 1e-10);

    const PendulumState p0{rng.uniform(-pi, pi), rng.uniform(-1, 1)};
    CHECK(oracle::max_step_deviation(p0, acts, Pendulum::advance, oracle::pendulum,
                                     oracle::pendulum_torque) < 1e-10);
  }
}

TEST_CASE("cartpole under alternating forces tracks the oracle trajectory") {
  CartPole cp;
  cp.set_state({0.01, -0.02, 0.03, 0.0});
  const auto acts = alternating(200);
  const auto traj = cp.reference_trajectory(acts);
  CartPoleState s{0.01, -0.02, 0.03, 0.0};
  REQUIRE(traj.size() >= 2);
  CHECK(traj.front() == s);
  for (std::size_t t = 1; t < traj.size(); ++t) {
    s = oracle::cartpole(s, oracle::cartpole_force(acts[t - 1]));
    CHECK(oracle::deviation(traj[t], s) < 1e-10);
  }
}

TEST_CASE("reference trajectories stop at terminal steps") {
  MountainCar mc;
  mc.set_state({-0.5, 0.0});
  const std::vector<std::size_t> acts(250, 1);
  CHECK(mc.reference_trajectory(acts).size() == 201);

  Acrobot ac;
  ac.set_state({pi, 0, 0, 0});
  CHECK(ac.reference_trajectory(acts).size() == 2);
}

TEST_CASE("free-running pendulum and mountaincar stay on the oracle trajectory") {
  SeededRng rng(13);
  Pendulum p;
  PendulumState ps{0.3, -0.5};
  p.set_state(ps);
  const auto acts = random_actions(200, 2, rng);
  const auto traj = p.reference_trajectory(acts);
  REQUIRE(traj.size() == 201);
  for (std::size_t t = 1; t < traj.size(); ++t) {
    ps = oracle::pendulum(ps, oracle::pendulum_torque(acts[t - 1]));
    CHECK(oracle::deviation(traj[t], ps) < 1e-10);
  }
  MountainCar mc;
  MountainCarState ms{-0.45, 0.0};
  mc.set_state(ms);
  const auto mc_acts = random_actions(200, 3, rng);
  const auto mtraj = mc.reference_trajectory(mc_acts);
  for (std::size_t t = 1; t < mtraj.size(); ++t) {
    ms = oracle::mountaincar(ms, oracle::mountaincar_push(mc_acts[t - 1]));
    CHECK(oracle::deviation(mtraj[t], ms) < 1e-10);
  }
}

TEST_CASE("zero-torque pendulum shows no secular energy drift") {
  // E = w^2 / 2 + (3g / 2l) cos(theta); symplectic Euler keeps it bounded
  // with no trend. Compare the mean energy over the first and last 100 steps.
  const double k = 15.0;
  PendulumState s{pi / 2, 0.0};
  PendulumState o = s;
  std::vector<double> e;
  for (int t = 0; t <= 200; ++t) {
    e.push_back(0.5 * s.theta_dot * s.theta_dot + k * std::cos(s.theta));
    s = Pendulum::advance(s, 0.0);
    o = oracle::pendulum(o, 0.0);
    CHECK(oracle::deviation(s, o) < 1e-10);
  }
  double first = 0, last = 0;
  for (int t = 0; t < 100; ++t) {
    first += e[t] / 100;
    last += e[e.size() - 100 + t] / 100;
  }
  CHECK(std::abs(last - first) / k < 0.01);
  for (double v : e) CHECK(std::abs(v) / k < 0.15);  // bounded oscillation, no blow-up
}

TEST_CASE("pendulum completion means the final window of rewards was all +1") {
  for (std::size_t window : {1u, 2u, 5u, 50u}) {
    Pendulum p(window);
    SeededRng rng(20 + window), act(30);
    std::size_t completed = 0;
    for (int ep = 0; ep < 300; ++ep) {
      p.reset(rng);
      std::vector<double> rewards;
      StepResult r;
      do {
        r = p.step(act.uniform_index(2));
        rewards.push_back(r.reward);
      } while (!r.terminal);
      CHECK(rewards.size() == 200);
      bool tail_positive = true;
      for (std::size_t i = rewards.size() - window; i < rewards.size(); ++i)
        tail_positive = tail_positive && rewards[i] == 1.0;
      CHECK(p.task_completed() == tail_positive);
      completed += tail_positive;
    }
    CAPTURE(window);
    if (window <= 2) CHECK(completed > 0);
  }
}

TEST_CASE("constants file agrees with the compiled constants") {
  std::ifstream in(std::string(DESQN_SOURCE_DIR) + "/config/env_constants.txt");
  REQUIRE(in.good());
  std::map<std::string, double> file;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    REQUIRE(eq != std::string::npos);
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(' ') + 1);
    file[key] = std::stod(line.substr(eq + 1));
  }
  namespace k = constants;
  const std::map<std::string, double> compiled{
      {"max_steps", k::kMaxSteps},
      {"cartpole.gravity", k::cartpole::gravity},
      {"cartpole.mass_cart", k::cartpole::mass_cart},
      {"cartpole.mass_pole", k::cartpole::mass_pole},
      {"cartpole.half_length", k::cartpole::half_length},
      {"cartpole.force_mag", k::cartpole::force_mag},
      {"cartpole.tau", k::cartpole::tau},
      {"cartpole.x_threshold", k::cartpole::x_threshold},
      {"cartpole.theta_threshold", k::cartpole::theta_threshold},
      {"cartpole.init_half_range", k::cartpole::init_half_range},
      {"cartpole.obs_x_scale", k::cartpole::obs_x_scale},
      {"cartpole.obs_theta_scale", k::cartpole::obs_theta_scale},
      {"cartpole.success_steps", k::cartpole::success_steps},
      {"mountaincar.min_position", k::mountaincar::min_position},
      {"mountaincar.max_position", k::mountaincar::max_position},
      {"mountaincar.max_speed", k::mountaincar::max_speed},
      {"mountaincar.goal_position", k::mountaincar::goal_position},
      {"mountaincar.goal_velocity", k::mountaincar::goal_velocity},
      {"mountaincar.force", k::mountaincar::force},
      {"mountaincar.gravity", k::mountaincar::gravity},
      {"mountaincar.init_low", k::mountaincar::init_low},
      {"mountaincar.init_high", k::mountaincar::init_high},
      {"mountaincar.obs_offset", k::mountaincar::obs_offset},
      {"mountaincar.obs_scale", k::mountaincar::obs_scale},
      {"acrobot.dt", k::acrobot::dt},
      {"acrobot.link_length_1", k::acrobot::link_length_1},
      {"acrobot.link_mass_1", k::acrobot::link_mass_1},
      {"acrobot.link_mass_2", k::acrobot::link_mass_2},
      {"acrobot.link_com_1", k::acrobot::link_com_1},
      {"acrobot.link_com_2", k::acrobot::link_com_2},
      {"acrobot.link_moi", k::acrobot::link_moi},
      {"acrobot.gravity", k::acrobot::gravity},
      {"acrobot.max_vel_1", k::acrobot::max_vel_1},
      {"acrobot.max_vel_2", k::acrobot::max_vel_2},
      {"acrobot.torque", k::acrobot::torque},
      {"acrobot.init_half_range", k::acrobot::init_half_range},
      {"acrobot.goal_height", k::acrobot::goal_height},
      {"pendulum.max_speed", k::pendulum::max_speed},
      {"pendulum.dt", k::pendulum::dt},
      {"pendulum.gravity", k::pendulum::gravity},
      {"pendulum.mass", k::pendulum::mass},
      {"pendulum.length", k::pendulum::length},
      {"pendulum.torque", k::pendulum::torque},
      {"pendulum.init_speed_half_range", k::pendulum::init_speed_half_range},
      {"pendulum.cost_theta", k::pendulum::cost_theta},
      {"pendulum.cost_theta_dot", k::pendulum::cost_theta_dot},
      {"pendulum.cost_torque", k::pendulum::cost_torque},
      {"pendulum.reward_threshold", k::pendulum::reward_threshold},
      {"pendulum.success_window", k::pendulum::success_window},
  };
  CHECK(file.size() == compiled.size());
  for (const auto& [key, value] : compiled) {
    CAPTURE(key);
    REQUIRE(file.count(key) == 1);
    CHECK(file.at(key) == value);
  }
}
