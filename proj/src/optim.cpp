#include "desqn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace desqn {

std::string_view to_string(OptimizerKind kind) noexcept {
  switch (kind) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::amsgrad: return "amsgrad";
  }
  return "unknown";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  if (name == "amsgrad") return OptimizerKind::amsgrad;
  throw Error(Errc::invalid_config, "unknown optimizer: " + std::string(name));
}

void OptimConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error(Errc::invalid_config, "lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw Error(Errc::invalid_config, "beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw Error(Errc::invalid_config, "beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw Error(Errc::invalid_config, "eps must be > 0");
}

Optimizer::Optimizer(OptimConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Optimizer::ensure_shapes(std::span<const std::span<double>> params, const GradientSet& grads) {
  if (grads.buffers.size() != params.size())
    throw Error(Errc::shape_mismatch, "gradient set does not match parameter tensors");
  for (std::size_t t = 0; t < params.size(); ++t)
    if (grads.buffers[t].size() != params[t].size())
      throw Error(Errc::shape_mismatch, "gradient buffer shape differs from its parameter");

  auto init = [&](std::vector<Vector>& buffers) {
    if (buffers.empty()) {
      for (const auto& p : params) buffers.emplace_back(p.size(), 0.0);
      return;
    }
    if (buffers.size() != params.size())
      throw Error(Errc::shape_mismatch, "optimizer state bound to a different parameter set");
    for (std::size_t t = 0; t < params.size(); ++t)
      if (buffers[t].size() != params[t].size())
        throw Error(Errc::shape_mismatch, "optimizer state bound to a different parameter set");
  };
  init(state_.first_moment);
  if (cfg_.kind != OptimizerKind::sgd) init(state_.second_moment);
  if (cfg_.kind == OptimizerKind::amsgrad) init(state_.max_second_moment);
}

void Optimizer::apply(std::span<const std::span<double>> params, const GradientSet& grads) {
  ensure_shapes(params, grads);
  if (!grads.all_finite()) throw Error(Errc::non_finite_gradient, "gradient contains NaN or Inf");
  ++state_.step_count;

  const double lr = cfg_.lr, b1 = cfg_.beta1, b2 = cfg_.beta2, eps = cfg_.eps;
  const auto t = static_cast<double>(state_.step_count);

  for (std::size_t k = 0; k < params.size(); ++k) {
    double* p = params[k].data();
    const double* g = grads.buffers[k].data();
    double* m = state_.first_moment[k].data();
    const std::size_t n = params[k].size();

    switch (cfg_.kind) {
      case OptimizerKind::sgd:
        for (std::size_t i = 0; i < n; ++i) {
          m[i] = b1 * m[i] - lr * g[i];
          p[i] += m[i];
        }
        break;
      case OptimizerKind::adam: {
        double* v = state_.second_moment[k].data();
        const double c1 = 1.0 - std::pow(b1, t);
        const double c2 = 1.0 - std::pow(b2, t);
        for (std::size_t i = 0; i < n; ++i) {
          m[i] = b1 * m[i] + (1.0 - b1) * g[i];
          v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
          p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
        break;
      }
      case OptimizerKind::amsgrad: {
        double* v = state_.second_moment[k].data();
        double* vmax = state_.max_second_moment[k].data();
        for (std::size_t i = 0; i < n; ++i) {
          m[i] = b1 * m[i] + (1.0 - b1) * g[i];
          v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
          vmax[i] = std::max(vmax[i], v[i]);
          p[i] -= lr * m[i] / (std::sqrt(vmax[i]) + eps);
        }
        break;
      }
    }
  }
}

void Optimizer::apply(Readout& net, const GradientSet& grads) {
  auto params = net.parameters();
  apply(std::span<const std::span<double>>(params), grads);
}

}  // namespace desqn
