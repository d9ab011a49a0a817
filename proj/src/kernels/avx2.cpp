// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "hcc/kernels.hpp"

namespace hcc::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);  // (l0+l2, l1+l3)
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

// One 4-lane accumulator, lanes folded at the end, remainder chained with fma.
double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s = std::fma(a[i], b[i], s);
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

// Shared body of gemm_nn and gemm_tn: for a fixed output row `crow`,
// crow[j] = fma(coef(r), src(r)[j], crow[j]) for r = 0..count-1 in order.
// Columns are handled in 16-wide register blocks, then 4-wide, then scalar.
template <class Coef, class Src>
inline void accumulate_row(double* crow, std::size_t n, std::size_t count, Coef coef, Src src) {
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) {
    __m256d c0 = _mm256_loadu_pd(crow + j);
    __m256d c1 = _mm256_loadu_pd(crow + j + 4);
    __m256d c2 = _mm256_loadu_pd(crow + j + 8);
    __m256d c3 = _mm256_loadu_pd(crow + j + 12);
    for (std::size_t r = 0; r < count; ++r) {
      const __m256d a = _mm256_set1_pd(coef(r));
      const double* s = src(r) + j;
      c0 = _mm256_fmadd_pd(a, _mm256_loadu_pd(s), c0);
      c1 = _mm256_fmadd_pd(a, _mm256_loadu_pd(s + 4), c1);
      c2 = _mm256_fmadd_pd(a, _mm256_loadu_pd(s + 8), c2);
      c3 = _mm256_fmadd_pd(a, _mm256_loadu_pd(s + 12), c3);
    }
    _mm256_storeu_pd(crow + j, c0);
    _mm256_storeu_pd(crow + j + 4, c1);
    _mm256_storeu_pd(crow + j + 8, c2);
    _mm256_storeu_pd(crow + j + 12, c3);
  }
  for (; j + 4 <= n; j += 4) {
    __m256d c0 = _mm256_loadu_pd(crow + j);
    for (std::size_t r = 0; r < count; ++r) {
      c0 = _mm256_fmadd_pd(_mm256_set1_pd(coef(r)), _mm256_loadu_pd(src(r) + j), c0);
    }
    _mm256_storeu_pd(crow + j, c0);
  }
  for (; j < n; ++j) {
    double c = crow[j];
    for (std::size_t r = 0; r < count; ++r) c = std::fma(coef(r), src(r)[j], c);
    crow[j] = c;
  }
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    accumulate_row(
        c + i * n, n, k, [arow](std::size_t p) { return arow[p]; },
        [b, n](std::size_t p) { return b + p * n; });
  }
}

// Four output columns at a time; each keeps the exact reduction order of dot().
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  const std::size_t k4 = k - k % 4;
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + j * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      __m256d s0 = _mm256_setzero_pd();
      __m256d s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd();
      __m256d s3 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k4; p += 4) {
        const __m256d x = _mm256_loadu_pd(arow + p);
        s0 = _mm256_fmadd_pd(x, _mm256_loadu_pd(b0 + p), s0);
        s1 = _mm256_fmadd_pd(x, _mm256_loadu_pd(b1 + p), s1);
        s2 = _mm256_fmadd_pd(x, _mm256_loadu_pd(b2 + p), s2);
        s3 = _mm256_fmadd_pd(x, _mm256_loadu_pd(b3 + p), s3);
      }
      double d0 = hsum(s0), d1 = hsum(s1), d2 = hsum(s2), d3 = hsum(s3);
      for (std::size_t p = k4; p < k; ++p) {
        d0 = std::fma(arow[p], b0[p], d0);
        d1 = std::fma(arow[p], b1[p], d1);
        d2 = std::fma(arow[p], b2[p], d2);
        d3 = std::fma(arow[p], b3[p], d3);
      }
      crow[j] += d0;
      crow[j + 1] += d1;
      crow[j + 2] += d2;
      crow[j + 3] += d3;
    }
    for (; j < n; ++j) crow[j] += dot(arow, b + j * k, k);
  }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    accumulate_row(
        c + p * n, n, m, [a, k, p](std::size_t i) { return a[i * k + p]; },
        [b, n](std::size_t i) { return b + i * n; });
  }
}

constexpr KernelSet kAvx2{Isa::avx2, dot, axpy, gemm_nn, gemm_nt, gemm_tn};

}  // namespace

const KernelSet* avx2_set() noexcept { return &kAvx2; }

}  // namespace hcc::kernels
