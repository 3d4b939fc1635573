#pragma once

// Dense double-precision kernels used on the training hot path. Each kernel
// has a portable scalar reference plus AVX2+FMA and AVX-512F variants; the
// widest one the CPU supports is chosen at startup and can be overridden with
// DESQN_ISA=scalar|avx2|avx512 or set_active_isa().

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace desqn::kernels {

enum class Isa { scalar, avx2, avx512 };

std::string_view to_string(Isa isa) noexcept;

/// C[i,j] = (accumulate ? C[i,j] : 0) + sum_p A(i,p) * B[p*ldb + j], where
/// A(i,p) = a[i*a_rs + p*a_cs]. Row-major A uses (lda, 1), a transposed view
/// uses (1, lda).
struct GemmArgs {
  std::size_t m, n, k;
  const double* a;
  std::size_t a_rs, a_cs;
  const double* b;
  std::size_t ldb;
  double* c;
  std::size_t ldc;
  bool accumulate;
};

struct KernelTable {
  Isa isa;
  double (*dot)(const double* x, const double* y, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// y[i] = (accumulate ? y[i] : 0) + sum_j A[i*lda + j] * x[j]
  void (*gemv)(std::size_t m, std::size_t n, const double* a, std::size_t lda, const double* x,
               double* y, bool accumulate);
  void (*gemm)(const GemmArgs& args);
};

const KernelTable& scalar_table() noexcept;
/// nullptr when the binary was built without the corresponding support.
const KernelTable* avx2_table() noexcept;
const KernelTable* avx512_table() noexcept;

/// Every ISA the running CPU can execute, narrowest first.
std::vector<Isa> available_isas();

bool cpu_supports(Isa isa) noexcept;

const KernelTable& table(Isa isa);
const KernelTable& active() noexcept;
Isa active_isa() noexcept;
/// Throws if the CPU cannot run `isa`.
void set_active_isa(Isa isa);

// Span conveniences over the active table.
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace desqn::kernels
