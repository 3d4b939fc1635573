#pragma once

// Physical constants of the four control tasks. Mirrored one-to-one in
// config/env_constants.txt (tests check the two agree).

#include <numbers>

namespace desqn::constants {

inline constexpr int kMaxSteps = 200;

// Barto, Sutton & Anderson (1983) cart-pole, as in the Gym CartPole source.
namespace cartpole {
inline constexpr double gravity = 9.8;
inline constexpr double mass_cart = 1.0;
inline constexpr double mass_pole = 0.1;
inline constexpr double half_length = 0.5;
inline constexpr double force_mag = 10.0;
inline constexpr double tau = 0.02;
inline constexpr double x_threshold = 2.4;
inline constexpr double theta_threshold = 12.0 * 2.0 * std::numbers::pi / 360.0;
inline constexpr double init_half_range = 0.05;
inline constexpr double obs_x_scale = 4.8;
inline constexpr double obs_theta_scale = 0.418;
inline constexpr int success_steps = 195;  // reward +1 when steps exceed this
}  // namespace cartpole

// Moore (1990) mountain car, as in the Gym MountainCar source.
namespace mountaincar {
inline constexpr double min_position = -1.2;
inline constexpr double max_position = 0.6;
inline constexpr double max_speed = 0.07;
inline constexpr double goal_position = 0.5;
inline constexpr double goal_velocity = 0.0;
inline constexpr double force = 0.001;
inline constexpr double gravity = 0.0025;
inline constexpr double init_low = -0.6;
inline constexpr double init_high = -0.4;
inline constexpr double obs_offset = 0.3;
inline constexpr double obs_scale = 0.9;
}  // namespace mountaincar

// Sutton (1996) acrobot, book dynamics as in the Gym Acrobot source.
namespace acrobot {
inline constexpr double dt = 0.2;
inline constexpr double link_length_1 = 1.0;
inline constexpr double link_mass_1 = 1.0;
inline constexpr double link_mass_2 = 1.0;
inline constexpr double link_com_1 = 0.5;
inline constexpr double link_com_2 = 0.5;
inline constexpr double link_moi = 1.0;
inline constexpr double gravity = 9.8;
inline constexpr double max_vel_1 = 4.0 * std::numbers::pi;
inline constexpr double max_vel_2 = 9.0 * std::numbers::pi;
inline constexpr double torque = 1.0;
inline constexpr double init_half_range = 0.1;
inline constexpr double goal_height = 1.0;
}  // namespace acrobot

// Gym Pendulum source, discrete torque.
namespace pendulum {
inline constexpr double max_speed = 8.0;
inline constexpr double dt = 0.05;
inline constexpr double gravity = 10.0;
inline constexpr double mass = 1.0;
inline constexpr double length = 1.0;
inline constexpr double torque = 1.0;
inline constexpr double init_speed_half_range = 1.0;
inline constexpr double cost_theta = 1.0;
inline constexpr double cost_theta_dot = 0.1;
inline constexpr double cost_torque = 0.0012;
inline constexpr double reward_threshold = -1.0;
inline constexpr int success_window = 50;
}  // namespace pendulum

}  // namespace desqn::constants
