#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "desqn/numerics.hpp"
#include "desqn/readout.hpp"

namespace desqn {

enum class OptimizerKind { sgd, adam, amsgrad };

std::string_view to_string(OptimizerKind kind) noexcept;
OptimizerKind parse_optimizer_kind(std::string_view name);

struct OptimConfig {
  OptimizerKind kind = OptimizerKind::amsgrad;
  double lr = 0.001;
  double beta1 = 0.9;  // momentum for sgd, first-moment decay otherwise
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// Moment buffers shaped like the parameter tensors they follow.
struct OptimState {
  std::uint64_t step_count = 0;
  std::vector<Vector> first_moment;   // sgd: velocity
  std::vector<Vector> second_moment;  // adam / amsgrad
  std::vector<Vector> max_second_moment;  // amsgrad only
};

/// First-order update rules:
///   sgd      v <- beta1 v - lr g;  p <- p + v            (classical momentum)
///   adam     m, v with bias correction; p <- p - lr m_hat / (sqrt(v_hat) + eps)
///   amsgrad  m <- beta1 m + (1-beta1) g;  v <- beta2 v + (1-beta2) g^2;
///            v_max <- max(v_max, v);  p <- p - lr m / (sqrt(v_max) + eps)
///            (no bias correction on either moment)
class Optimizer {
 public:
  explicit Optimizer(OptimConfig cfg);

  const OptimConfig& config() const noexcept { return cfg_; }
  const OptimState& state() const noexcept { return state_; }

  void apply(std::span<const std::span<double>> params, const GradientSet& grads);
  void apply(Readout& net, const GradientSet& grads);

 private:
  void ensure_shapes(std::span<const std::span<double>> params, const GradientSet& grads);

  OptimConfig cfg_;
  OptimState state_;
};

}  // namespace desqn
