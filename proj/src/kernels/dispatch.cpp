#include <atomic>
#include <cstdlib>
#include <string>

#include "desqn/error.hpp"
#include "desqn/kernels.hpp"

namespace desqn::kernels {

#if !DESQN_HAVE_AVX2
const KernelTable* avx2_table() noexcept { return nullptr; }
#endif
#if !DESQN_HAVE_AVX512
const KernelTable* avx512_table() noexcept { return nullptr; }
#endif

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::avx512: return "avx512";
  }
  return "unknown";
}

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if DESQN_HAVE_AVX2
      return avx2_table() != nullptr && __builtin_cpu_supports("avx2") &&
             __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::avx512:
#if DESQN_HAVE_AVX512
      return avx512_table() != nullptr && __builtin_cpu_supports("avx512f");
#else
      return false;
#endif
  }
  return false;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::avx512})
    if (cpu_supports(isa)) out.push_back(isa);
  return out;
}

const KernelTable& table(Isa isa) {
  if (!cpu_supports(isa))
    throw Error(Errc::invalid_config, "kernel ISA not available: " + std::string(to_string(isa)));
  switch (isa) {
    case Isa::avx2: return *avx2_table();
    case Isa::avx512: return *avx512_table();
    case Isa::scalar: break;
  }
  return scalar_table();
}

namespace {

const KernelTable* initial_table() noexcept {
  if (const char* env = std::getenv("DESQN_ISA")) {
    const std::string_view want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::avx512})
      if (want == to_string(isa) && cpu_supports(isa)) return &table(isa);
  }
  return &table(available_isas().back());
}

std::atomic<const KernelTable*>& active_slot() noexcept {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable& active() noexcept { return *active_slot().load(std::memory_order_relaxed); }

Isa active_isa() noexcept { return active().isa; }

void set_active_isa(Isa isa) { active_slot().store(&table(isa), std::memory_order_relaxed); }

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::dimension_mismatch, "dot operand lengths");
  return active().dot(x.data(), y.data(), x.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw Error(Errc::dimension_mismatch, "axpy operand lengths");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace desqn::kernels
