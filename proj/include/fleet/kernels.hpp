#pragma once

#include <cstddef>

// Data-parallel inner loops used by the numeric layers (reward dot products,
// GP covariance assembly, IDW extrapolation, MAE reduction). Each kernel has
// a scalar reference implementation and, on x86-64 with AVX2, a vectorized
// variant. The implementation is chosen once at startup from cpuid; the
// FLEETSIM_KERNELS=scalar environment variable forces the reference path.
namespace fleet::kernels {

struct Impl {
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, size_t n);
  // sum_i w[i] * (a[i] - b[i])^2
  double (*weighted_sqdist)(const double* a, const double* b, const double* w, size_t n);
  // Inverse-distance-squared accumulation against query point (qr, qc):
  //   num += vals[i] / d2_i,  den += 1 / d2_i,  d2_i = (qr-pr[i])^2 + (qc-pc[i])^2.
  // Caller guarantees d2_i > 0 for every point.
  void (*idw_accumulate)(double qr, double qc, const double* pr, const double* pc,
                         const double* vals, size_t n, double* num, double* den);
  // sum_i |a[i] - b[i]|
  double (*sum_abs_diff)(const double* a, const double* b, size_t n);
};

const Impl& scalar();
const Impl& active();
bool avx2_compiled();   // AVX2 translation unit present in this build
bool avx2_selected();   // active() dispatches to the AVX2 variant

// Convenience wrappers over active().
double dot(const double* a, const double* b, size_t n);
double weighted_sqdist(const double* a, const double* b, const double* w, size_t n);
void idw_accumulate(double qr, double qc, const double* pr, const double* pc,
                    const double* vals, size_t n, double* num, double* den);
double sum_abs_diff(const double* a, const double* b, size_t n);

}  // namespace fleet::kernels
