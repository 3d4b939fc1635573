// Compiled with -mavx512f -mfma. Same contract as the AVX2 unit: reached only
// through the dispatch table after a CPUID check.

#include <immintrin.h>

#include "desqn/kernels.hpp"

namespace desqn::kernels {
namespace {

#define DESQN_INLINE inline __attribute__((always_inline))

DESQN_INLINE __mmask8 tail_mask(std::size_t lanes) {
  return static_cast<__mmask8>((1u << lanes) - 1u);
}

double dot_avx512(const double* x, const double* y, std::size_t n) {
  __m512d acc0 = _mm512_setzero_pd();
  __m512d acc1 = _mm512_setzero_pd();
  __m512d acc2 = _mm512_setzero_pd();
  __m512d acc3 = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    acc0 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), acc0);
    acc1 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i + 8), _mm512_loadu_pd(y + i + 8), acc1);
    acc2 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i + 16), _mm512_loadu_pd(y + i + 16), acc2);
    acc3 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i + 24), _mm512_loadu_pd(y + i + 24), acc3);
  }
  for (; i + 8 <= n; i += 8)
    acc0 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), acc0);
  if (i < n) {
    const __mmask8 m = tail_mask(n - i);
    acc1 = _mm512_fmadd_pd(_mm512_maskz_loadu_pd(m, x + i), _mm512_maskz_loadu_pd(m, y + i), acc1);
  }
  return _mm512_reduce_add_pd(_mm512_add_pd(_mm512_add_pd(acc0, acc1), _mm512_add_pd(acc2, acc3)));
}

void axpy_avx512(double alpha, const double* x, double* y, std::size_t n) {
  const __m512d a = _mm512_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm512_storeu_pd(y + i, _mm512_fmadd_pd(a, _mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i)));
  if (i < n) {
    const __mmask8 m = tail_mask(n - i);
    const __m512d r =
        _mm512_fmadd_pd(a, _mm512_maskz_loadu_pd(m, x + i), _mm512_maskz_loadu_pd(m, y + i));
    _mm512_mask_storeu_pd(y + i, m, r);
  }
}

void gemv_avx512(std::size_t m, std::size_t n, const double* a, std::size_t lda, const double* x,
                 double* y, bool accumulate) {
  const std::size_t n8 = n & ~std::size_t{7};
  const __mmask8 mask = tail_mask(n - n8);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* r0 = a + i * lda;
    const double* r1 = r0 + lda;
    const double* r2 = r1 + lda;
    const double* r3 = r2 + lda;
    __m512d s0 = _mm512_setzero_pd(), s1 = _mm512_setzero_pd();
    __m512d s2 = _mm512_setzero_pd(), s3 = _mm512_setzero_pd();
    for (std::size_t j = 0; j < n8; j += 8) {
      const __m512d xv = _mm512_loadu_pd(x + j);
      s0 = _mm512_fmadd_pd(_mm512_loadu_pd(r0 + j), xv, s0);
      s1 = _mm512_fmadd_pd(_mm512_loadu_pd(r1 + j), xv, s1);
      s2 = _mm512_fmadd_pd(_mm512_loadu_pd(r2 + j), xv, s2);
      s3 = _mm512_fmadd_pd(_mm512_loadu_pd(r3 + j), xv, s3);
    }
    if (n8 < n) {
      const __m512d xv = _mm512_maskz_loadu_pd(mask, x + n8);
      s0 = _mm512_fmadd_pd(_mm512_maskz_loadu_pd(mask, r0 + n8), xv, s0);
      s1 = _mm512_fmadd_pd(_mm512_maskz_loadu_pd(mask, r1 + n8), xv, s1);
      s2 = _mm512_fmadd_pd(_mm512_maskz_loadu_pd(mask, r2 + n8), xv, s2);
      s3 = _mm512_fmadd_pd(_mm512_maskz_loadu_pd(mask, r3 + n8), xv, s3);
    }
    const double v[4] = {_mm512_reduce_add_pd(s0), _mm512_reduce_add_pd(s1),
                         _mm512_reduce_add_pd(s2), _mm512_reduce_add_pd(s3)};
    for (int r = 0; r < 4; ++r) y[i + r] = accumulate ? y[i + r] + v[r] : v[r];
  }
  for (; i < m; ++i) {
    const double v = dot_avx512(a + i * lda, x, n);
    y[i] = accumulate ? y[i] + v : v;
  }
}

// MR rows x NV vectors of eight columns; when Masked the last vector covers
// only the lanes in `mask`.
template <int MR, int NV, bool Masked>
DESQN_INLINE void gemm_tile(const GemmArgs& g, std::size_t i0, std::size_t j0, __mmask8 mask) {
  __m512d acc[MR][NV];
  for (int r = 0; r < MR; ++r) {
    double* c_row = g.c + (i0 + r) * g.ldc + j0;
    for (int v = 0; v < NV; ++v) {
      if (!g.accumulate) {
        acc[r][v] = _mm512_setzero_pd();
      } else if (Masked && v == NV - 1) {
        acc[r][v] = _mm512_maskz_loadu_pd(mask, c_row + 8 * v);
      } else {
        acc[r][v] = _mm512_loadu_pd(c_row + 8 * v);
      }
    }
  }
  const double* a_base = g.a + i0 * g.a_rs;
  const double* b_col = g.b + j0;
  for (std::size_t p = 0; p < g.k; ++p) {
    const double* b_row = b_col + p * g.ldb;
    __m512d bv[NV];
    for (int v = 0; v < NV; ++v) {
      if (Masked && v == NV - 1) {
        bv[v] = _mm512_maskz_loadu_pd(mask, b_row + 8 * v);
      } else {
        bv[v] = _mm512_loadu_pd(b_row + 8 * v);
      }
    }
    const double* a_col = a_base + p * g.a_cs;
    for (int r = 0; r < MR; ++r) {
      const __m512d av = _mm512_set1_pd(a_col[r * g.a_rs]);
      for (int v = 0; v < NV; ++v) acc[r][v] = _mm512_fmadd_pd(av, bv[v], acc[r][v]);
    }
  }
  for (int r = 0; r < MR; ++r) {
    double* c_row = g.c + (i0 + r) * g.ldc + j0;
    for (int v = 0; v < NV; ++v) {
      if (Masked && v == NV - 1) {
        _mm512_mask_storeu_pd(c_row + 8 * v, mask, acc[r][v]);
      } else {
        _mm512_storeu_pd(c_row + 8 * v, acc[r][v]);
      }
    }
  }
}

template <int NV, bool Masked>
DESQN_INLINE void gemm_column_panel(const GemmArgs& g, std::size_t j0, __mmask8 mask) {
  std::size_t i = 0;
  for (; i + 8 <= g.m; i += 8) gemm_tile<8, NV, Masked>(g, i, j0, mask);
  for (; i + 4 <= g.m; i += 4) gemm_tile<4, NV, Masked>(g, i, j0, mask);
  for (; i < g.m; ++i) gemm_tile<1, NV, Masked>(g, i, j0, mask);
}

void gemm_avx512(const GemmArgs& g) {
  if (g.m == 0 || g.n == 0) return;
  const __mmask8 full = 0xFF;
  std::size_t j = 0;
  for (; j + 24 <= g.n; j += 24) gemm_column_panel<3, false>(g, j, full);
  for (; j + 8 <= g.n; j += 8) gemm_column_panel<1, false>(g, j, full);
  if (j < g.n) gemm_column_panel<1, true>(g, j, tail_mask(g.n - j));
}

constexpr KernelTable kAvx512{Isa::avx512, dot_avx512, axpy_avx512, gemv_avx512, gemm_avx512};

}  // namespace

const KernelTable* avx512_table() noexcept { return &kAvx512; }

}  // namespace desqn::kernels
