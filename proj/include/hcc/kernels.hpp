#pragma once

// Arithmetic inner loops behind every matrix operation. Each instruction-set
// variant implements the same table; the scalar table is the reference that
// the others are equivalence-tested against.
//
// Per-element accumulation order is fixed by the reduction extent alone (never
// by the number of rows or the position of an element inside a SIMD block), so
// computing a single row gives bit-identical results to computing it as part of
// a larger matrix. Causal-attention tests rely on that.

#include <cstddef>
#include <string_view>
#include <vector>

namespace hcc::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

struct KernelSet {
  Isa isa;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
  // C[k x n] += A[m x k]^T * B[m x n]
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
};

const KernelSet& scalar_set() noexcept;
// nullptr when the variant was not compiled for this target.
const KernelSet* avx2_set() noexcept;

bool cpu_supports(Isa isa) noexcept;
std::vector<Isa> available();

// The table used by tensor operations. Chosen once at startup: the widest
// supported variant unless HCC_KERNELS=scalar is set in the environment.
const KernelSet& active() noexcept;
// Throws ArgumentError if the variant is unavailable on this CPU.
void select(Isa isa);

}  // namespace hcc::kernels
