#include "fleet/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace fleet::kernels {

namespace detail {
// Defined in kernels_avx2.cpp when that TU is part of the build.
const Impl* avx2_impl();
}  // namespace detail

namespace {

double dot_scalar(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double weighted_sqdist_scalar(const double* a, const double* b, const double* w, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i];
    acc += w[i] * d * d;
  }
  return acc;
}

void idw_accumulate_scalar(double qr, double qc, const double* pr, const double* pc,
                           const double* vals, size_t n, double* num, double* den) {
  double nacc = 0.0, dacc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dr = qr - pr[i];
    double dc = qc - pc[i];
    double w = 1.0 / (dr * dr + dc * dc);
    nacc += vals[i] * w;
    dacc += w;
  }
  *num += nacc;
  *den += dacc;
}

double sum_abs_diff_scalar(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i];
    acc += d < 0 ? -d : d;
  }
  return acc;
}

const Impl kScalar{"scalar", dot_scalar, weighted_sqdist_scalar, idw_accumulate_scalar,
                   sum_abs_diff_scalar};

const Impl* pick_active() {
  const char* force = std::getenv("FLEETSIM_KERNELS");
  if (force && std::strcmp(force, "scalar") == 0) return &kScalar;
#if FLEET_HAVE_AVX2
  if (__builtin_cpu_supports("avx2")) {
    const Impl* v = detail::avx2_impl();
    if (v) return v;
  }
#endif
  return &kScalar;
}

}  // namespace

const Impl& scalar() { return kScalar; }

const Impl& active() {
  static const Impl* chosen = pick_active();
  return *chosen;
}

bool avx2_compiled() {
#if FLEET_HAVE_AVX2
  return true;
#else
  return false;
#endif
}

bool avx2_selected() { return std::strcmp(active().name, "avx2") == 0; }

double dot(const double* a, const double* b, size_t n) { return active().dot(a, b, n); }

double weighted_sqdist(const double* a, const double* b, const double* w, size_t n) {
  return active().weighted_sqdist(a, b, w, n);
}

void idw_accumulate(double qr, double qc, const double* pr, const double* pc, const double* vals,
                    size_t n, double* num, double* den) {
  active().idw_accumulate(qr, qc, pr, pc, vals, n, num, den);
}

double sum_abs_diff(const double* a, const double* b, size_t n) {
  return active().sum_abs_diff(a, b, n);
}

}  // namespace fleet::kernels
