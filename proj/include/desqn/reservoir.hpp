#pragma once

#include <cstddef>
#include <span>

#include "desqn/numerics.hpp"

namespace desqn {

struct ReservoirConfig {
  std::size_t n_x = 50;
  std::size_t n_i = 1;
  double p = 0.1;            // recurrent connection probability
  double g = 0.9;            // recurrent gain applied at step time
  double input_scale = 1.0;  // W_in ~ U[-input_scale, input_scale)
  double bias_scale = 0.2;   // b ~ U[-bias_scale, bias_scale)

  void validate() const;
};

/// Fixed random recurrent network. The stored recurrent matrix is normalised
/// to spectral radius 1; the gain g multiplies it at every step:
///   x <- tanh(g * W_rec * x + W_in * u + b)
class Reservoir {
 public:
  static constexpr int kMaxDegenerateRetries = 10;

  static Reservoir build(const ReservoirConfig& cfg, SeededRng& rng);

  /// Explicit weights, mainly for tests. Shapes are checked.
  Reservoir(Matrix w_rec, Matrix w_in, Vector b, double g);

  std::span<const double> step(std::span<const double> u);
  void reset_state() noexcept;

  std::size_t n_x() const noexcept { return b_.size(); }
  std::size_t n_i() const noexcept { return w_in_.cols(); }
  double gain() const noexcept { return g_; }
  void set_gain(double g);

  const Matrix& w_rec() const noexcept { return w_rec_; }
  const Matrix& w_in() const noexcept { return w_in_; }
  const Vector& bias() const noexcept { return b_; }
  std::span<const double> state() const noexcept { return x_; }
  /// Overwrites the state; used to probe fading memory from arbitrary starts.
  void set_state(std::span<const double> x);

 private:
  Matrix w_rec_;
  Matrix w_in_;
  Vector b_;
  double g_;
  Vector x_;
  Vector scratch_;
};

}  // namespace desqn
