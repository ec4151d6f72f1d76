#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

// Dense inner loops of the model. Each backend implements the same table;
// the scalar one is the reference the others are tested against.
namespace comformer::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// y = W x + b (W row-major rows x cols; b may be null)
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols, const double* x, const double* b, double* y);
  /// out[c] = exp(-gamma (x - centers[c])^2)
  void (*rbf)(double x, const double* centers, double gamma, double* out, std::size_t n);
  /// v[i] = exp(v[i])
  void (*exp_inplace)(double* v, std::size_t n);
};

std::string_view backend_name(Backend backend);
std::optional<Backend> backend_from_name(std::string_view name);
bool backend_available(Backend backend);

/// Table for a specific backend (falls back to scalar when unavailable).
const KernelTable& table(Backend backend);

/// Backend used by the free functions below: COMFORMER_SIMD=scalar|avx2|neon
/// when set and available, else the best supported one.
Backend active_backend();
void set_active_backend(Backend backend);

double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemv(const double* w, std::size_t rows, std::size_t cols, const double* x, const double* b, double* y);
void rbf(double x, const double* centers, double gamma, double* out, std::size_t n);
void exp_inplace(double* v, std::size_t n);

namespace detail {
extern const KernelTable kScalarTable;
const KernelTable* avx2_table();
const KernelTable* neon_table();
}  // namespace detail

}  // namespace comformer::kernels
