#include "desqn/reservoir.hpp"

#include <algorithm>
#include <cmath>

#include "desqn/kernels.hpp"

namespace desqn {

void ReservoirConfig::validate() const {
  if (n_x < 1 || n_i < 1) throw Error(Errc::invalid_config, "reservoir needs n_x >= 1 and n_i >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw Error(Errc::invalid_config, "connection probability must lie in (0, 1]");
  if (!(g >= 0.0) || !std::isfinite(g)) throw Error(Errc::invalid_config, "gain must be finite and >= 0");
  if (!(input_scale > 0.0) || !(bias_scale > 0.0))
    throw Error(Errc::invalid_config, "input and bias scales must be positive");
}

Reservoir Reservoir::build(const ReservoirConfig& cfg, SeededRng& rng) {
  cfg.validate();
  for (int attempt = 0; attempt < kMaxDegenerateRetries; ++attempt) {
    Matrix w = sparsify(uniform_matrix(cfg.n_x, cfg.n_x, -1.0, 1.0, rng), cfg.p, rng);
    const SpectralRadiusResult rho = spectral_radius(w);
    if (!rho.converged || rho.radius < 1e-12) continue;
    Matrix w_in = uniform_matrix(cfg.n_x, cfg.n_i, -cfg.input_scale, cfg.input_scale, rng);
    Vector b = uniform_vector(cfg.n_x, -cfg.bias_scale, cfg.bias_scale, rng);
    return Reservoir(w.scaled(1.0 / rho.radius), std::move(w_in), std::move(b), cfg.g);
  }
  throw Error(Errc::degenerate_matrix,
              "sparsified recurrent matrix has vanishing spectral radius after retries");
}

Reservoir::Reservoir(Matrix w_rec, Matrix w_in, Vector b, double g)
    : w_rec_(std::move(w_rec)), w_in_(std::move(w_in)), b_(std::move(b)), g_(g) {
  const std::size_t n = b_.size();
  if (n == 0 || w_rec_.rows() != n || w_rec_.cols() != n || w_in_.rows() != n || w_in_.cols() == 0)
    throw Error(Errc::dimension_mismatch, "reservoir weight shapes disagree");
  set_gain(g);
  x_.assign(n, 0.0);
  scratch_.assign(n, 0.0);
}

void Reservoir::set_gain(double g) {
  if (!(g >= 0.0) || !std::isfinite(g)) throw Error(Errc::invalid_config, "gain must be finite and >= 0");
  g_ = g;
}

std::span<const double> Reservoir::step(std::span<const double> u) {
  if (u.size() != n_i()) throw Error(Errc::dimension_mismatch, "reservoir input length");
  const auto& k = kernels::active();
  const std::size_t n = n_x();
  k.gemv(n, n, w_rec_.data(), n, x_.data(), scratch_.data(), false);
  for (std::size_t i = 0; i < n; ++i) scratch_[i] = g_ * scratch_[i] + b_[i];
  k.gemv(n, n_i(), w_in_.data(), n_i(), u.data(), scratch_.data(), true);
  for (std::size_t i = 0; i < n; ++i) x_[i] = std::tanh(scratch_[i]);
  return x_;
}

void Reservoir::reset_state() noexcept { std::fill(x_.begin(), x_.end(), 0.0); }

void Reservoir::set_state(std::span<const double> x) {
  if (x.size() != n_x()) throw Error(Errc::dimension_mismatch, "reservoir state length");
  std::copy(x.begin(), x.end(), x_.begin());
}

}  // namespace desqn
