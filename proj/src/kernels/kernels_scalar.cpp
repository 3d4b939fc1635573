#include "desqn/kernels.hpp"

namespace desqn::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(std::size_t m, std::size_t n, const double* a, std::size_t lda, const double* x,
                 double* y, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double v = dot_scalar(a + i * lda, x, n);
    y[i] = accumulate ? y[i] + v : v;
  }
}

void gemm_scalar(const GemmArgs& g) {
  for (std::size_t i = 0; i < g.m; ++i) {
    double* c_row = g.c + i * g.ldc;
    if (!g.accumulate)
      for (std::size_t j = 0; j < g.n; ++j) c_row[j] = 0.0;
    for (std::size_t p = 0; p < g.k; ++p) {
      const double a_ip = g.a[i * g.a_rs + p * g.a_cs];
      const double* b_row = g.b + p * g.ldb;
      for (std::size_t j = 0; j < g.n; ++j) c_row[j] += a_ip * b_row[j];
    }
  }
}

constexpr KernelTable kScalar{Isa::scalar, dot_scalar, axpy_scalar, gemv_scalar, gemm_scalar};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace desqn::kernels
