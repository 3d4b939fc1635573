// Compiled with -mavx2 -mfma. Only reached through the dispatch table after a
// CPUID check, so nothing here may be inlined into portable code: keep this
// translation unit free of std:: templates that could be merged across TUs.

#include <immintrin.h>

#include "desqn/kernels.hpp"

namespace desqn::kernels {
namespace {

#define DESQN_INLINE inline __attribute__((always_inline))

DESQN_INLINE double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

DESQN_INLINE __m256i tail_mask(std::size_t lanes) {
  const __m256i idx = _mm256_setr_epi64x(0, 1, 2, 3);
  return _mm256_cmpgt_epi64(_mm256_set1_epi64x(static_cast<long long>(lanes)), idx);
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  if (i < n) {
    const __m256i mask = tail_mask(n - i);
    acc1 = _mm256_fmadd_pd(_mm256_maskload_pd(x + i, mask), _mm256_maskload_pd(y + i, mask), acc1);
  }
  return hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  if (i < n) {
    const __m256i mask = tail_mask(n - i);
    const __m256d r =
        _mm256_fmadd_pd(a, _mm256_maskload_pd(x + i, mask), _mm256_maskload_pd(y + i, mask));
    _mm256_maskstore_pd(y + i, mask, r);
  }
}

void gemv_avx2(std::size_t m, std::size_t n, const double* a, std::size_t lda, const double* x,
               double* y, bool accumulate) {
  const std::size_t n4 = n & ~std::size_t{3};
  const __m256i mask = tail_mask(n - n4);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* r0 = a + i * lda;
    const double* r1 = r0 + lda;
    const double* r2 = r1 + lda;
    const double* r3 = r2 + lda;
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
    for (std::size_t j = 0; j < n4; j += 4) {
      const __m256d xv = _mm256_loadu_pd(x + j);
      s0 = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + j), xv, s0);
      s1 = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + j), xv, s1);
      s2 = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + j), xv, s2);
      s3 = _mm256_fmadd_pd(_mm256_loadu_pd(r3 + j), xv, s3);
    }
    if (n4 < n) {
      const __m256d xv = _mm256_maskload_pd(x + n4, mask);
      s0 = _mm256_fmadd_pd(_mm256_maskload_pd(r0 + n4, mask), xv, s0);
      s1 = _mm256_fmadd_pd(_mm256_maskload_pd(r1 + n4, mask), xv, s1);
      s2 = _mm256_fmadd_pd(_mm256_maskload_pd(r2 + n4, mask), xv, s2);
      s3 = _mm256_fmadd_pd(_mm256_maskload_pd(r3 + n4, mask), xv, s3);
    }
    // Transpose-reduce the four accumulators into one vector of row sums.
    const __m256d h01 = _mm256_hadd_pd(s0, s1);
    const __m256d h23 = _mm256_hadd_pd(s2, s3);
    const __m256d lo = _mm256_permute2f128_pd(h01, h23, 0x20);
    const __m256d hi = _mm256_permute2f128_pd(h01, h23, 0x31);
    __m256d sums = _mm256_add_pd(lo, hi);
    if (accumulate) sums = _mm256_add_pd(sums, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, sums);
  }
  for (; i < m; ++i) {
    const double v = dot_avx2(a + i * lda, x, n);
    y[i] = accumulate ? y[i] + v : v;
  }
}

// MR rows x NV vectors of four columns. When Masked, the last vector only
// covers the lanes enabled in `mask`.
template <int MR, int NV, bool Masked>
DESQN_INLINE void gemm_tile(const GemmArgs& g, std::size_t i0, std::size_t j0, __m256i mask) {
  __m256d acc[MR][NV];
  for (int r = 0; r < MR; ++r) {
    double* c_row = g.c + (i0 + r) * g.ldc + j0;
    for (int v = 0; v < NV; ++v) {
      if (!g.accumulate) {
        acc[r][v] = _mm256_setzero_pd();
      } else if (Masked && v == NV - 1) {
        acc[r][v] = _mm256_maskload_pd(c_row + 4 * v, mask);
      } else {
        acc[r][v] = _mm256_loadu_pd(c_row + 4 * v);
      }
    }
  }
  const double* a_base = g.a + i0 * g.a_rs;
  const double* b_col = g.b + j0;
  for (std::size_t p = 0; p < g.k; ++p) {
    const double* b_row = b_col + p * g.ldb;
    __m256d bv[NV];
    for (int v = 0; v < NV; ++v) {
      if (Masked && v == NV - 1) {
        bv[v] = _mm256_maskload_pd(b_row + 4 * v, mask);
      } else {
        bv[v] = _mm256_loadu_pd(b_row + 4 * v);
      }
    }
    const double* a_col = a_base + p * g.a_cs;
    for (int r = 0; r < MR; ++r) {
      const __m256d av = _mm256_broadcast_sd(a_col + r * g.a_rs);
      for (int v = 0; v < NV; ++v) acc[r][v] = _mm256_fmadd_pd(av, bv[v], acc[r][v]);
    }
  }
  for (int r = 0; r < MR; ++r) {
    double* c_row = g.c + (i0 + r) * g.ldc + j0;
    for (int v = 0; v < NV; ++v) {
      if (Masked && v == NV - 1) {
        _mm256_maskstore_pd(c_row + 4 * v, mask, acc[r][v]);
      } else {
        _mm256_storeu_pd(c_row + 4 * v, acc[r][v]);
      }
    }
  }
}

template <int NV, bool Masked>
DESQN_INLINE void gemm_column_panel(const GemmArgs& g, std::size_t j0, __m256i mask) {
  std::size_t i = 0;
  for (; i + 4 <= g.m; i += 4) gemm_tile<4, NV, Masked>(g, i, j0, mask);
  for (; i < g.m; ++i) gemm_tile<1, NV, Masked>(g, i, j0, mask);
}

void gemm_avx2(const GemmArgs& g) {
  if (g.m == 0 || g.n == 0) return;
  const __m256i full = _mm256_set1_epi64x(-1);
  std::size_t j = 0;
  for (; j + 12 <= g.n; j += 12) gemm_column_panel<3, false>(g, j, full);
  for (; j + 4 <= g.n; j += 4) gemm_column_panel<1, false>(g, j, full);
  if (j < g.n) gemm_column_panel<1, true>(g, j, tail_mask(g.n - j));
}

constexpr KernelTable kAvx2{Isa::avx2, dot_avx2, axpy_avx2, gemv_avx2, gemm_avx2};

}  // namespace

const KernelTable* avx2_table() noexcept { return &kAvx2; }

}  // namespace desqn::kernels
