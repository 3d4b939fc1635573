#pragma once

#include <cstddef>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "desqn/error.hpp"

namespace desqn {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  /// Resizes without preserving contents; reuses the allocation when possible.
  void reshape(std::size_t rows, std::size_t cols) {
    rows_ = rows;
    cols_ = cols;
    data_.resize(rows * cols);
  }

  Matrix scaled(double factor) const;
  Matrix transposed() const;

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// xoshiro256** seeded through SplitMix64. All draws are derived from the raw
/// 64-bit output with fixed arithmetic, so sequences are identical on every
/// platform (the std:: distributions are not).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0);

  /// Independent sub-stream keyed by a label, e.g. ("reservoir", master).
  static SeededRng stream(std::uint64_t master_seed, std::string_view label);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept;
  /// Uniform integer on [0, n); unbiased (Lemire rejection). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
/// FNV-1a over bytes; stable across platforms.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi, SeededRng& rng);
Vector uniform_vector(std::size_t len, double lo, double hi, SeededRng& rng);

/// Keeps each entry with probability keep_prob, zeroes it otherwise.
Matrix sparsify(const Matrix& m, double keep_prob, SeededRng& rng);

struct SpectralRadiusResult {
  double radius = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Block size of the subspace iteration in spectral_radius.
inline constexpr std::size_t kSpectralBlock = 8;

/// Largest eigenvalue magnitude by block power (subspace) iteration with
/// Rayleigh-Ritz projection, which handles dominant complex-conjugate pairs.
/// Converged when the estimate moves by at most tol (relative) on three
/// consecutive iterations, or the block spans an invariant subspace.
SpectralRadiusResult spectral_radius(const Matrix& m, double tol = 1e-12,
                                     std::size_t max_iter = 200000);

/// All eigenvalues of a small dense matrix (Hessenberg reduction followed by
/// Francis double-shift QR). Used for the Ritz matrices above; unordered.
std::vector<std::complex<double>> eigenvalues_small(const Matrix& m);

/// Central-difference gradient of f at v.
Vector finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                        std::span<const double> v, double h);

void require_finite(std::span<const double> values, Errc code, const char* what);

}  // namespace desqn
