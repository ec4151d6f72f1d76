#include "comformer/kernels.hpp"

#include <arm_neon.h>

#include <cmath>
#include <cstdint>

namespace comformer::kernels::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_neon(const double* w, std::size_t rows, std::size_t cols, const double* x, const double* b, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = (b ? b[r] : 0.0) + dot_neon(w + r * cols, x, cols);
}

float64x2_t exp2v(float64x2_t x) {
  const float64x2_t lo_limit = vdupq_n_f64(-708.0);
  const float64x2_t hi_limit = vdupq_n_f64(709.782712893384);
  const uint64x2_t underflow = vcltq_f64(x, lo_limit);
  const uint64x2_t overflow = vcgtq_f64(x, vdupq_n_f64(709.782712893384));
  const float64x2_t xc = vminq_f64(vmaxq_f64(x, lo_limit), hi_limit);
  const float64x2_t n = vrndnq_f64(vmulq_f64(xc, vdupq_n_f64(1.4426950408889634)));
  float64x2_t r = vfmsq_f64(xc, n, vdupq_n_f64(6.93147180369123816490e-01));
  r = vfmsq_f64(r, n, vdupq_n_f64(1.90821492927058770002e-10));
  constexpr double kInvFact[] = {1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
                                 1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
                                 1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        0.5,
                                 1.0,                1.0};
  float64x2_t p = vdupq_n_f64(kInvFact[0]);
  for (int i = 1; i < 14; ++i) p = vfmaq_f64(vdupq_n_f64(kInvFact[i]), p, r);
  const int64x2_t e = vshlq_n_s64(vaddq_s64(vcvtq_s64_f64(n), vdupq_n_s64(1022)), 52);
  float64x2_t result = vmulq_f64(vmulq_f64(p, vreinterpretq_f64_s64(e)), vdupq_n_f64(2.0));
  result = vbslq_f64(underflow, vdupq_n_f64(0.0), result);
  result = vbslq_f64(overflow, vdupq_n_f64(HUGE_VAL), result);
  return result;
}

void exp_neon(double* v, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(v + i, exp2v(vld1q_f64(v + i)));
  for (; i < n; ++i) v[i] = std::exp(v[i]);
}

void rbf_neon(double x, const double* centers, double gamma, double* out, std::size_t n) {
  const float64x2_t vx = vdupq_n_f64(x);
  const float64x2_t vg = vdupq_n_f64(-gamma);
  std::size_t c = 0;
  for (; c + 2 <= n; c += 2) {
    const float64x2_t d = vsubq_f64(vx, vld1q_f64(centers + c));
    vst1q_f64(out + c, exp2v(vmulq_f64(vmulq_f64(vg, d), d)));
  }
  for (; c < n; ++c) {
    const double d = x - centers[c];
    out[c] = std::exp(-gamma * d * d);
  }
}

const KernelTable kNeonTable{dot_neon, axpy_neon, gemv_neon, rbf_neon, exp_neon};

}  // namespace

const KernelTable* neon_table() { return &kNeonTable; }

}  // namespace comformer::kernels::detail
