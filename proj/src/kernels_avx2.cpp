// AVX2 variants of the numeric kernels. Compiled with -mavx2 -mfma; nothing
// in this TU runs unless the dispatcher confirmed cpu support at startup.
#include "fleet/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

namespace fleet::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

double weighted_sqdist_avx2(const double* a, const double* b, const double* w, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), d), d, acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) {
    double d = a[i] - b[i];
    total += w[i] * d * d;
  }
  return total;
}

void idw_accumulate_avx2(double qr, double qc, const double* pr, const double* pc,
                         const double* vals, size_t n, double* num, double* den) {
  __m256d vqr = _mm256_set1_pd(qr);
  __m256d vqc = _mm256_set1_pd(qc);
  __m256d one = _mm256_set1_pd(1.0);
  __m256d nacc = _mm256_setzero_pd();
  __m256d dacc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d dr = _mm256_sub_pd(vqr, _mm256_loadu_pd(pr + i));
    __m256d dc = _mm256_sub_pd(vqc, _mm256_loadu_pd(pc + i));
    __m256d d2 = _mm256_fmadd_pd(dr, dr, _mm256_mul_pd(dc, dc));
    __m256d wv = _mm256_div_pd(one, d2);
    nacc = _mm256_fmadd_pd(_mm256_loadu_pd(vals + i), wv, nacc);
    dacc = _mm256_add_pd(dacc, wv);
  }
  double ntotal = hsum(nacc);
  double dtotal = hsum(dacc);
  for (; i < n; ++i) {
    double dr = qr - pr[i];
    double dc = qc - pc[i];
    double w = 1.0 / (dr * dr + dc * dc);
    ntotal += vals[i] * w;
    dtotal += w;
  }
  *num += ntotal;
  *den += dtotal;
}

double sum_abs_diff_avx2(const double* a, const double* b, size_t n) {
  const __m256d signmask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(signmask, d));
  }
  double total = hsum(acc);
  for (; i < n; ++i) {
    double d = a[i] - b[i];
    total += d < 0 ? -d : d;
  }
  return total;
}

const Impl kAvx2{"avx2", dot_avx2, weighted_sqdist_avx2, idw_accumulate_avx2, sum_abs_diff_avx2};

}  // namespace

namespace detail {
const Impl* avx2_impl() { return &kAvx2; }
}  // namespace detail

}  // namespace fleet::kernels

#else

namespace fleet::kernels {
namespace detail {
const Impl* avx2_impl() { return nullptr; }
}  // namespace detail
}  // namespace fleet::kernels

#endif
