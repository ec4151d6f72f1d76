#include "comformer/kernels.hpp"

#include <cmath>

namespace comformer::kernels::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* w, std::size_t rows, std::size_t cols, const double* x, const double* b, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = (b ? b[r] : 0.0) + dot_scalar(w + r * cols, x, cols);
  }
}

void rbf_scalar(double x, const double* centers, double gamma, double* out, std::size_t n) {
  for (std::size_t c = 0; c < n; ++c) {
    const double d = x - centers[c];
    out[c] = std::exp(-gamma * d * d);
  }
}

void exp_scalar(double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(v[i]);
}

}  // namespace

const KernelTable kScalarTable{dot_scalar, axpy_scalar, gemv_scalar, rbf_scalar, exp_scalar};

}  // namespace comformer::kernels::detail
