#include "comformer/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace comformer::kernels {

namespace detail {
#ifndef COMFORMER_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif
#ifndef COMFORMER_HAVE_NEON
const KernelTable* neon_table() { return nullptr; }
#endif
}  // namespace detail

namespace {

bool cpu_supports_avx2() {
#if defined(COMFORMER_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend best_backend() {
  if (backend_available(Backend::kAvx2)) return Backend::kAvx2;
  if (backend_available(Backend::kNeon)) return Backend::kNeon;
  return Backend::kScalar;
}

Backend initial_backend() {
  if (const char* env = std::getenv("COMFORMER_SIMD")) {
    if (const auto requested = backend_from_name(env); requested && backend_available(*requested)) return *requested;
  }
  return best_backend();
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> current{&table(initial_backend())};
  return current;
}

std::atomic<Backend>& active_enum() {
  static std::atomic<Backend> current{initial_backend()};
  return current;
}

}  // namespace

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "unknown";
}

std::optional<Backend> backend_from_name(std::string_view name) {
  if (name == "scalar") return Backend::kScalar;
  if (name == "avx2") return Backend::kAvx2;
  if (name == "neon") return Backend::kNeon;
  return std::nullopt;
}

bool backend_available(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
      return detail::avx2_table() != nullptr && cpu_supports_avx2();
    case Backend::kNeon:
      return detail::neon_table() != nullptr;
  }
  return false;
}

const KernelTable& table(Backend backend) {
  if (backend_available(backend)) {
    if (backend == Backend::kAvx2) return *detail::avx2_table();
    if (backend == Backend::kNeon) return *detail::neon_table();
  }
  return detail::kScalarTable;
}

Backend active_backend() { return active_enum().load(std::memory_order_relaxed); }

void set_active_backend(Backend backend) {
  if (!backend_available(backend)) backend = Backend::kScalar;
  active_enum().store(backend, std::memory_order_relaxed);
  active_table().store(&table(backend), std::memory_order_relaxed);
}

double dot(const double* a, const double* b, std::size_t n) {
  return active_table().load(std::memory_order_relaxed)->dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active_table().load(std::memory_order_relaxed)->axpy(alpha, x, y, n);
}

void gemv(const double* w, std::size_t rows, std::size_t cols, const double* x, const double* b, double* y) {
  active_table().load(std::memory_order_relaxed)->gemv(w, rows, cols, x, b, y);
}

void rbf(double x, const double* centers, double gamma, double* out, std::size_t n) {
  active_table().load(std::memory_order_relaxed)->rbf(x, centers, gamma, out, n);
}

void exp_inplace(double* v, std::size_t n) { active_table().load(std::memory_order_relaxed)->exp_inplace(v, n); }

}  // namespace comformer::kernels
