#include <doctest.h>

#include <cmath>
#include <set>

#include "desqn/numerics.hpp"
#include "support/eigen_oracle.hpp"

using namespace desqn;
using desqn::testing::dense_spectral_radius;

namespace {

// Reference xoshiro256** written from the published algorithm description.
struct RefXoshiro {
  std::uint64_t s[4];
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  explicit RefXoshiro(std::uint64_t seed) {
    std::uint64_t state = seed;
    for (auto& w : s) {
      state += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = state;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
    }
  }
  std::uint64_t next() {
    const std::uint64_t out = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return out;
  }
};

}  // namespace

TEST_CASE("hash functions match published test vectors") {
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("SeededRng reproduces the reference generator") {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xdeadbeefULL}) {
    SeededRng rng(seed);
    RefXoshiro ref(seed);
    for (int i = 0; i < 1000; ++i) REQUIRE(rng.next_u64() == ref.next());
  }
}

TEST_CASE("SeededRng draws") {
  SeededRng a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    differs |= (u != c.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(differs);

  SUBCASE("streams with different labels diverge") {
    auto r1 = SeededRng::stream(5, "replay");
    auto r2 = SeededRng::stream(5, "exploration");
    auto r3 = SeededRng::stream(5, "replay");
    const auto x = r1.next_u64();
    CHECK(x != r2.next_u64());
    CHECK(x == r3.next_u64());
  }
  SUBCASE("uniform_index stays in range and hits every value") {
    SeededRng rng(3);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
      const auto k = rng.uniform_index(7);
      REQUIRE(k < 7);
      seen.insert(k);
    }
    CHECK(seen.size() == 7);
  }
  SUBCASE("uniform(lo, hi) never returns hi") {
    SeededRng rng(9);
    for (int i = 0; i < 10000; ++i) {
      const double v = rng.uniform(-0.2, 0.2);
      REQUIRE(v >= -0.2);
      REQUIRE(v < 0.2);
    }
  }
}

TEST_CASE("uniform_matrix") {
  SeededRng rng(7);
  const Matrix m = uniform_matrix(2, 2, -1.0, 1.0, rng);
  for (double v : m.flat()) {
    CHECK(v >= -1.0);
    CHECK(v < 1.0);
  }
  SeededRng rng1(1);
  const Matrix b = uniform_matrix(3, 3, -0.2, 0.2, rng1);
  for (double v : b.flat()) {
    CHECK(v >= -0.2);
    CHECK(v < 0.2);
  }
  SeededRng x(42), y(42);
  CHECK(uniform_matrix(5, 4, -1, 1, x) == uniform_matrix(5, 4, -1, 1, y));

  CHECK_THROWS_AS(uniform_matrix(2, 2, 1.0, 1.0, rng), Error);
  CHECK_THROWS_AS(uniform_matrix(0, 2, -1.0, 1.0, rng), Error);
  try {
    uniform_matrix(2, 2, 2.0, 1.0, rng);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_range);
  }
}

TEST_CASE("sparsify") {
  SeededRng rng(11);
  const Matrix m = uniform_matrix(50, 50, -1.0, 1.0, rng);
  CHECK(sparsify(m, 1.0, rng) == m);
  for (double v : sparsify(m, 0.0, rng).flat()) CHECK(v == 0.0);

  // Binomial(2500, 0.1): mean 250, sigma 15.
  const Matrix s = sparsify(m, 0.1, rng);
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.flat()[i] != 0.0) {
      ++nonzero;
      CHECK(s.flat()[i] == m.flat()[i]);
    }
  }
  const double sigma = std::sqrt(2500 * 0.1 * 0.9);
  CHECK(std::abs(static_cast<double>(nonzero) - 250.0) <= 3 * sigma);

  try {
    sparsify(m, 1.5, rng);
    FAIL("expected invalid_probability");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_probability);
  }
  CHECK_THROWS_AS(sparsify(m, -0.1, rng), Error);
}

TEST_CASE("spectral_radius on known spectra") {
  CHECK(spectral_radius(Matrix::identity(5)).radius == doctest::Approx(1.0).epsilon(1e-12));

  Matrix d(3, 3);
  d(0, 0) = 0.3;
  d(1, 1) = -2.0;
  d(2, 2) = 1.1;
  const auto r = spectral_radius(d);
  CHECK(r.converged);
  CHECK(std::abs(r.radius - 2.0) < 1e-10);

  // Rotation scaled by 1.5: eigenvalues +-1.5i, invisible to plain power iteration.
  const Matrix rot = Matrix::from_rows({{0.0, -1.5}, {1.5, 0.0}});
  CHECK(std::abs(spectral_radius(rot).radius - 1.5) < 1e-10);

  // Dominant complex pair plus a smaller real eigenvalue.
  const Matrix mixed = Matrix::from_rows({{0.6, -0.8, 0.0}, {0.8, 0.6, 0.0}, {0.0, 0.0, 0.5}});
  CHECK(std::abs(spectral_radius(mixed).radius - 1.0) < 1e-10);

  // Nilpotent: all eigenvalues zero.
  const Matrix nil = Matrix::from_rows({{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, 0.0}});
  CHECK(spectral_radius(nil).radius < 1e-12);
  CHECK(spectral_radius(Matrix(4, 4)).radius == 0.0);

  try {
    spectral_radius(Matrix(2, 3));
    FAIL("expected non_square_matrix");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::non_square_matrix);
  }
  CHECK_THROWS_AS(spectral_radius(d, 1e-12, 0), Error);
}

TEST_CASE("spectral_radius agrees with a dense eigensolver") {
  SeededRng rng(3);
  const Matrix m = uniform_matrix(50, 50, -1.0, 1.0, rng);
  const auto r = spectral_radius(m);
  CHECK(r.converged);
  CHECK(std::abs(r.radius - dense_spectral_radius(m)) < 1e-8);

  SeededRng rng2(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix s = sparsify(uniform_matrix(50, 50, -1.0, 1.0, rng2), 0.1, rng2);
    const double oracle = dense_spectral_radius(s);
    CHECK(std::abs(spectral_radius(s).radius - oracle) < 1e-8 * std::max(1.0, oracle));
  }
}

TEST_CASE("spectral_radius is absolutely homogeneous") {
  SeededRng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = uniform_matrix(20, 20, -1.0, 1.0, rng);
    const double c = rng.uniform(-3.0, 3.0);
    const double base = spectral_radius(m).radius;
    CHECK(std::abs(spectral_radius(m.scaled(c)).radius - std::abs(c) * base) < 1e-8);
  }
}

TEST_CASE("spectral_radius reports non-convergence") {
  SeededRng rng(5);
  const Matrix m = uniform_matrix(30, 30, -1.0, 1.0, rng);
  const auto r = spectral_radius(m, 1e-15, 2);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 2);
  CHECK(r.radius > 0.0);
}

TEST_CASE("finite_diff_grad") {
  const Vector v{1.0, 2.0};
  auto dot = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; };
  const Vector g = finite_diff_grad(dot, v, 1e-5);
  CHECK(std::abs(g[0] - 2.0) < 1e-8);
  CHECK(std::abs(g[1] - 4.0) < 1e-8);

  for (double gi : finite_diff_grad([](std::span<const double>) { return 3.0; }, v, 1e-5))
    CHECK(gi == 0.0);

  const Vector w{0.5, -0.5};
  auto tanh_sum = [](std::span<const double> x) { return std::tanh(x[0]) + std::tanh(x[1]); };
  const double sech2 = 1.0 / (std::cosh(0.5) * std::cosh(0.5));
  const Vector gt = finite_diff_grad(tanh_sum, w, 1e-5);
  CHECK(std::abs(gt[0] - sech2) < 1e-8);
  CHECK(std::abs(gt[1] - sech2) < 1e-8);

  CHECK_THROWS_AS(finite_diff_grad(dot, v, 0.0), Error);
}

TEST_CASE("Matrix basics") {
  const Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.size() == 6);
  CHECK(m(1, 2) == 6);
  const Matrix t = m.transposed();
  CHECK(t(2, 1) == 6);
  CHECK(t.transposed() == m);
  CHECK(m.all_finite());
  Matrix bad = m;
  bad(0, 0) = std::nan("");
  CHECK_FALSE(bad.all_finite());
}

TEST_CASE("eigenvalues_small matches a dense eigensolver") {
  SeededRng rng(31);
  for (std::size_t n = 1; n <= 12; ++n) {
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix m = uniform_matrix(n, n, -1.0, 1.0, rng);
      auto ours = eigenvalues_small(m);
      REQUIRE(ours.size() == n);
      Eigen::MatrixXd a(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = m(i, j);
      Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
      // Every oracle eigenvalue has a partner among ours.
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        double best = 1e300;
        for (const auto& e : ours) best = std::min(best, std::abs(e - es.eigenvalues()[i]));
        CHECK(best < 1e-9);
      }
    }
  }
  const auto diag = eigenvalues_small(Matrix::from_rows({{2, 0, 0}, {0, 2, 0}, {0, 0, -1}}));
  double sum = 0.0;
  for (const auto& e : diag) sum += e.real();
  CHECK(sum == doctest::Approx(3.0));
}
