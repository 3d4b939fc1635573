#include "desqn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

namespace desqn {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_range: return "invalid-range";
    case Errc::invalid_probability: return "invalid-probability";
    case Errc::invalid_dimension: return "invalid-dimension";
    case Errc::invalid_config: return "invalid-config";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::non_square_matrix: return "non-square-matrix";
    case Errc::degenerate_matrix: return "degenerate-matrix";
    case Errc::empty_batch: return "empty-batch";
    case Errc::architecture_mismatch: return "architecture-mismatch";
    case Errc::shape_mismatch: return "shape-mismatch";
    case Errc::non_finite_gradient: return "non-finite-gradient";
    case Errc::invalid_transition: return "invalid-transition";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::invalid_action: return "invalid-action";
    case Errc::step_after_terminal: return "step-after-terminal";
    case Errc::unknown_task: return "unknown-task";
    case Errc::io_error: return "io-error";
  }
  return "unknown-error";
}

// ---------------------------------------------------------------------------
// Matrix

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw Error(Errc::dimension_mismatch, "ragged matrix literal");
    std::copy(row.begin(), row.end(), m.row(i++).begin());
  }
  return m;
}

Matrix Matrix::scaled(double factor) const {
  Matrix out = *this;
  for (double& v : out.data_) v *= factor;
  return out;
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(std::span<const double> values, Errc code, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw Error(code, what);
}

// ---------------------------------------------------------------------------
// RNG

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t z = seed;
  for (auto& word : s_) {
    word = splitmix64(z);
    z += 0x9e3779b97f4a7c15ULL;
  }
}

SeededRng SeededRng::stream(std::uint64_t master_seed, std::string_view label) {
  return SeededRng(splitmix64(splitmix64(master_seed) ^ fnv1a64(label)));
}

namespace {
constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
}  // namespace

std::uint64_t SeededRng::next_u64() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double SeededRng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) noexcept {
  // lo + (hi - lo) * u can round up to hi for u close to 1.
  const double v = lo + (hi - lo) * uniform();
  return v < hi ? v : std::nextafter(hi, lo);
}

std::uint64_t SeededRng::uniform_index(std::uint64_t n) noexcept {
  std::uint64_t x = next_u64();
  unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<unsigned __int128>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

// ---------------------------------------------------------------------------
// Random construction

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi, SeededRng& rng) {
  if (!(lo < hi)) throw Error(Errc::invalid_range, "uniform_matrix requires lo < hi");
  if (rows == 0 || cols == 0) throw Error(Errc::invalid_dimension, "uniform_matrix shape");
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = rng.uniform(lo, hi);
  return m;
}

Vector uniform_vector(std::size_t len, double lo, double hi, SeededRng& rng) {
  if (!(lo < hi)) throw Error(Errc::invalid_range, "uniform_vector requires lo < hi");
  Vector v(len);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

Matrix sparsify(const Matrix& m, double keep_prob, SeededRng& rng) {
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0))
    throw Error(Errc::invalid_probability, "keep_prob must lie in [0, 1]");
  Matrix out = m;
  for (double& v : out.flat())
    if (!rng.bernoulli(keep_prob)) v = 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Spectral radius

namespace {

void matvec(const Matrix& a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const auto row = a.row(i);
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Overwrites x with v such that (I - beta v v^T) x is a multiple of e1 and
// returns beta (0 when x is already zero).
double householder(std::span<double> x) {
  double alpha = norm(x);
  if (alpha == 0.0) return 0.0;
  if (x[0] > 0.0) alpha = -alpha;
  x[0] -= alpha;
  const double vv = dot(x, x);
  return vv == 0.0 ? 0.0 : 2.0 / vv;
}

// Rows r0.., columns c0..c1 of h <- (I - beta v v^T) h.
void reflect_rows(Matrix& h, std::span<const double> v, double beta, std::size_t r0,
                  std::size_t c0, std::size_t c1) {
  for (std::size_t j = c0; j <= c1; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * h(r0 + i, j);
    s *= beta;
    for (std::size_t i = 0; i < v.size(); ++i) h(r0 + i, j) -= s * v[i];
  }
}

// Rows r0..r1, columns c0.. of h <- h (I - beta v v^T).
void reflect_cols(Matrix& h, std::span<const double> v, double beta, std::size_t r0,
                  std::size_t r1, std::size_t c0) {
  for (std::size_t i = r0; i <= r1; ++i) {
    double s = 0.0;
    for (std::size_t t = 0; t < v.size(); ++t) s += h(i, c0 + t) * v[t];
    s *= beta;
    for (std::size_t t = 0; t < v.size(); ++t) h(i, c0 + t) -= s * v[t];
  }
}

void to_hessenberg(Matrix& h) {
  const std::size_t n = h.rows();
  Vector v;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    v.assign(n - k - 1, 0.0);
    for (std::size_t i = k + 1; i < n; ++i) v[i - k - 1] = h(i, k);
    const double beta = householder(v);
    if (beta == 0.0) continue;
    reflect_rows(h, v, beta, k + 1, k, n - 1);
    reflect_cols(h, v, beta, 0, n - 1, k + 1);
  }
}

// One implicit double-shift (Francis) QR sweep on the unreduced Hessenberg
// block h[lo..hi, lo..hi], hi - lo >= 2. Only the block is transformed, which
// preserves its eigenvalues.
void francis_sweep(Matrix& h, std::size_t lo, std::size_t hi, bool exceptional) {
  const std::size_t m = hi - 1;
  double s = h(m, m) + h(hi, hi);
  double t = h(m, m) * h(hi, hi) - h(m, hi) * h(hi, m);
  if (exceptional) {
    const double w = std::abs(h(hi, m)) + std::abs(h(m, m - 1));
    s = 1.5 * w;
    t = w * w;
  }
  double x = h(lo, lo) * h(lo, lo) + h(lo, lo + 1) * h(lo + 1, lo) - s * h(lo, lo) + t;
  double y = h(lo + 1, lo) * (h(lo, lo) + h(lo + 1, lo + 1) - s);
  double z = h(lo + 1, lo) * h(lo + 2, lo + 1);
  for (std::size_t k = lo; k + 2 <= hi; ++k) {
    double v[3] = {x, y, z};
    const double beta = householder(v);
    if (beta != 0.0) {
      reflect_rows(h, v, beta, k, k > lo ? k - 1 : lo, hi);
      reflect_cols(h, v, beta, lo, std::min(k + 3, hi), k);
    }
    x = h(k + 1, k);
    y = h(k + 2, k);
    if (k + 3 <= hi) z = h(k + 3, k);
  }
  double v[2] = {x, y};
  const double beta = householder(v);
  if (beta != 0.0) {
    reflect_rows(h, v, beta, hi - 1, hi - 2, hi);
    reflect_cols(h, v, beta, lo, hi, hi - 1);
  }
}

void eig_2x2(double a, double b, double c, double d, std::vector<std::complex<double>>& out) {
  const double half_tr = 0.5 * (a + d);
  const double disc = 0.25 * (a - d) * (a - d) + b * c;
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    out.emplace_back(half_tr + r, 0.0);
    out.emplace_back(half_tr - r, 0.0);
  } else {
    const double r = std::sqrt(-disc);
    out.emplace_back(half_tr, r);
    out.emplace_back(half_tr, -r);
  }
}

// Modified Gram-Schmidt (two passes) over the block columns. Columns that
// collapse onto earlier ones are replaced by random directions. Returns false
// if every column vanished, i.e. the block was annihilated.
bool orthonormalize(std::vector<Vector>& q, SeededRng& rng) {
  double scale = 0.0;
  for (const auto& col : q) scale = std::max(scale, norm(col));
  if (scale == 0.0) return false;
  for (std::size_t j = 0; j < q.size(); ++j) {
    for (;;) {
      const double before = norm(q[j]);
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t i = 0; i < j; ++i) {
          const double proj = dot(q[i], q[j]);
          for (std::size_t r = 0; r < q[j].size(); ++r) q[j][r] -= proj * q[i][r];
        }
      const double after = norm(q[j]);
      if (before > 1e-13 * scale && after > 1e-10 * before) {
        for (double& v : q[j]) v /= after;
        break;
      }
      for (double& v : q[j]) v = rng.uniform(-1.0, 1.0);
      scale = std::max(scale, norm(q[j]));
    }
  }
  return true;
}

// True when the directed graph with an edge i -> j for every nonzero m(i, j)
// has no cycle. Such a matrix is permutation-similar to a strictly triangular
// one, hence nilpotent with spectral radius exactly 0.
bool acyclic_pattern(const Matrix& m) {
  const std::size_t n = m.rows();
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (m(i, j) != 0.0) ++indegree[j];
  std::vector<std::size_t> ready;
  for (std::size_t j = 0; j < n; ++j)
    if (indegree[j] == 0) ready.push_back(j);
  std::size_t removed = 0;
  while (!ready.empty()) {
    const std::size_t i = ready.back();
    ready.pop_back();
    ++removed;
    for (std::size_t j = 0; j < n; ++j)
      if (m(i, j) != 0.0 && --indegree[j] == 0) ready.push_back(j);
  }
  return removed == n;
}

}  // namespace

std::vector<std::complex<double>> eigenvalues_small(const Matrix& m) {
  if (!m.square()) throw Error(Errc::non_square_matrix, "eigenvalues_small needs a square matrix");
  const std::size_t n = m.rows();
  std::vector<std::complex<double>> out;
  out.reserve(n);
  if (!m.all_finite()) throw Error(Errc::degenerate_matrix, "matrix has non-finite entries");
  Matrix h = m;
  to_hessenberg(h);
  double anorm = 0.0;
  for (double v : h.flat()) anorm = std::max(anorm, std::abs(v));
  constexpr double eps = std::numeric_limits<double>::epsilon();

  std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n) - 1;
  std::size_t iter = 0;
  const std::size_t max_iter = 100 * std::max<std::size_t>(n, 1);
  while (hi >= 0) {
    std::ptrdiff_t lo = hi;
    while (lo > 0) {
      double s = std::abs(h(lo, lo)) + std::abs(h(lo - 1, lo - 1));
      if (s == 0.0) s = anorm;
      if (std::abs(h(lo, lo - 1)) <= eps * s) {
        h(lo, lo - 1) = 0.0;
        break;
      }
      --lo;
    }
    if (lo == hi) {
      out.emplace_back(h(hi, hi), 0.0);
      hi -= 1;
      iter = 0;
    } else if (lo == hi - 1) {
      eig_2x2(h(lo, lo), h(lo, hi), h(hi, lo), h(hi, hi), out);
      hi -= 2;
      iter = 0;
    } else {
      if (++iter > max_iter)
        throw Error(Errc::degenerate_matrix, "QR iteration did not converge");
      francis_sweep(h, static_cast<std::size_t>(lo), static_cast<std::size_t>(hi), iter % 11 == 10);
    }
  }
  return out;
}

SpectralRadiusResult spectral_radius(const Matrix& m, double tol, std::size_t max_iter) {
  if (!m.square()) throw Error(Errc::non_square_matrix, "spectral_radius needs a square matrix");
  if (max_iter == 0) throw Error(Errc::invalid_config, "max_iter must be >= 1");
  const std::size_t n = m.rows();
  SpectralRadiusResult result;
  if (n == 0 || acyclic_pattern(m)) {
    result.converged = true;
    result.iterations = n == 0 ? 0 : 1;
    return result;
  }

  // Block power iteration with Rayleigh-Ritz extraction. The top Ritz value
  // converges at rate |lambda_{k+1}| / |lambda_1|, so near-ties among the k
  // leading eigenvalues (real vs. complex pair, which stall a single vector or
  // a pair) do not slow it down.
  const std::size_t k = std::min(n, kSpectralBlock);
  SeededRng rng(splitmix64(n));
  std::vector<Vector> q(k, Vector(n)), z(k, Vector(n));
  for (auto& col : q)
    for (double& v : col) v = rng.uniform(-1.0, 1.0);
  orthonormalize(q, rng);
  Matrix h(k, k);

  constexpr std::size_t kStableRuns = 3;
  double previous = -1.0;
  std::size_t stable = 0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    result.iterations = it;
    for (std::size_t j = 0; j < k; ++j) matvec(m, q[j], z[j]);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) h(i, j) = dot(q[i], z[j]);
    double estimate = 0.0;
    for (const auto& ev : eigenvalues_small(h)) estimate = std::max(estimate, std::abs(ev));
    result.radius = estimate;

    // ||A Q - Q H|| = 0 means span(Q) is invariant and the Ritz values are exact.
    double resid2 = 0.0, h2 = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t r = 0; r < n; ++r) {
        double v = z[j][r];
        for (std::size_t i = 0; i < k; ++i) v -= q[i][r] * h(i, j);
        resid2 += v * v;
      }
    for (double v : h.flat()) h2 += v * v;
    if (std::sqrt(resid2) <= tol * std::sqrt(h2)) {
      result.converged = true;
      return result;
    }

    if (previous >= 0.0 && std::abs(estimate - previous) <= tol * estimate) {
      if (++stable >= kStableRuns) {
        result.converged = true;
        return result;
      }
    } else {
      stable = 0;
    }
    previous = estimate;

    std::swap(q, z);
    if (!orthonormalize(q, rng)) {
      // A^j annihilated a generic block: the matrix is nilpotent.
      result.radius = 0.0;
      result.converged = true;
      return result;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

Vector finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                        std::span<const double> v, double h) {
  if (!(h > 0.0)) throw Error(Errc::invalid_range, "finite difference step must be positive");
  Vector probe(v.begin(), v.end());
  Vector grad(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = f(probe);
    probe[i] = saved - h;
    const double down = f(probe);
    probe[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace desqn
