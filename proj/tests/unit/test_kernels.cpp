#include "comformer/fixtures.hpp"
#include "comformer/graph.hpp"
#include "comformer/kernels.hpp"
#include "comformer/model/comformer.hpp"
#include "comformer/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace comformer;
namespace k = comformer::kernels;

namespace {

std::vector<k::Backend> simd_backends() {
  std::vector<k::Backend> out;
  for (auto b : {k::Backend::kAvx2, k::Backend::kNeon}) {
    if (k::backend_available(b)) out.push_back(b);
  }
  return out;
}

std::vector<double> random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Restores the process-wide backend when a test switches it.
struct BackendGuard {
  k::Backend saved = k::active_backend();
  ~BackendGuard() { k::set_active_backend(saved); }
};

}  // namespace

TEST(Kernels, ScalarAlwaysAvailable) {
  EXPECT_TRUE(k::backend_available(k::Backend::kScalar));
  EXPECT_EQ(k::backend_from_name("scalar"), k::Backend::kScalar);
  EXPECT_EQ(k::backend_from_name("avx2"), k::Backend::kAvx2);
  EXPECT_FALSE(k::backend_from_name("sse9").has_value());
  EXPECT_EQ(k::backend_name(k::Backend::kNeon), "neon");
}

TEST(Kernels, SimdMatchesScalarOnLinearAlgebra) {
  const auto& ref = k::table(k::Backend::kScalar);
  Rng rng(1);
  for (auto backend : simd_backends()) {
    const auto& t = k::table(backend);
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 63u, 64u, 65u, 256u, 1001u}) {
      const auto a = random_vector(rng, n);
      const auto b = random_vector(rng, n);
      EXPECT_LT(rel(t.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n)), 1e-13) << n;

      auto y1 = random_vector(rng, n);
      auto y2 = y1;
      t.axpy(0.7, a.data(), y1.data(), n);
      ref.axpy(0.7, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-15 * std::max(1.0, std::abs(y2[i])));
    }
    for (std::size_t rows : {1u, 3u, 4u, 5u, 8u, 13u, 64u}) {
      for (std::size_t cols : {1u, 3u, 4u, 7u, 64u, 92u, 256u}) {
        const auto w = random_vector(rng, rows * cols);
        const auto x = random_vector(rng, cols);
        const auto bias = random_vector(rng, rows);
        std::vector<double> y1(rows), y2(rows);
        for (const double* bp : {bias.data(), static_cast<const double*>(nullptr)}) {
          t.gemv(w.data(), rows, cols, x.data(), bp, y1.data());
          ref.gemv(w.data(), rows, cols, x.data(), bp, y2.data());
          for (std::size_t r = 0; r < rows; ++r) EXPECT_LT(rel(y1[r], y2[r]), 1e-13) << rows << "x" << cols;
        }
      }
    }
  }
}

TEST(Kernels, SimdExpMatchesScalar) {
  const auto& ref = k::table(k::Backend::kScalar);
  Rng rng(2);
  std::vector<double> inputs{0.0, -0.0, 1.0, -1.0, 1e-300, -1e-300, 700.0, 709.0, 709.78, 709.8, 710.0, -700.0,
                             -708.0, -708.5, -745.0, -746.0, -1e4, 1e4, std::log(2.0), -std::log(2.0)};
  for (int i = 0; i < 20000; ++i) inputs.push_back(rng.uniform(-740.0, 709.7));
  for (int i = 0; i < 5000; ++i) inputs.push_back(rng.uniform(-5.0, 5.0));
  for (auto backend : simd_backends()) {
    auto got = inputs;
    auto want = inputs;
    k::table(backend).exp_inplace(got.data(), got.size());
    ref.exp_inplace(want.data(), want.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (std::isinf(want[i])) {
        EXPECT_TRUE(std::isinf(got[i])) << inputs[i];
      } else if (want[i] < 1e-300) {
        // Subnormal range: absolute agreement is what matters.
        EXPECT_LT(std::abs(got[i] - want[i]), 1e-300) << inputs[i];
      } else {
        EXPECT_LT(std::abs(got[i] - want[i]) / want[i], 1e-14) << inputs[i];
      }
    }
  }
}

TEST(Kernels, SimdRbfMatchesScalar) {
  const auto& ref = k::table(k::Backend::kScalar);
  std::vector<double> centers(256);
  for (std::size_t c = 0; c < centers.size(); ++c) centers[c] = -4.0 + 4.0 * static_cast<double>(c) / 255.0;
  const double gamma = 1.0 / (2.0 * std::pow(4.0 / 255.0, 2));
  Rng rng(3);
  for (auto backend : simd_backends()) {
    for (int t = 0; t < 200; ++t) {
      const double x = rng.uniform(-5.0, 1.0);
      for (std::size_t n : {256u, 255u, 3u}) {
        std::vector<double> a(n), b(n);
        k::table(backend).rbf(x, centers.data(), gamma, a.data(), n);
        ref.rbf(x, centers.data(), gamma, b.data(), n);
        for (std::size_t c = 0; c < n; ++c) EXPECT_NEAR(a[c], b[c], 1e-14 * std::max(b[c], 1e-300) + 1e-300);
      }
    }
  }
}

TEST(Kernels, ForwardPassAgreesAcrossBackends) {
  BackendGuard guard;
  const Crystal c = generate({FixtureFamily::kTriclinic, 6, 4});
  for (auto variant : {model::Variant::kEComFormer, model::Variant::kIComFormer}) {
    model::ModelConfig config;
    config.variant = variant;
    const auto params = model::init_parameters(config);
    const CrystalGraph g = build_graph(c, 12, model::required_graph_kind(config));
    k::set_active_backend(k::Backend::kScalar);
    const double want = model::predict(g, config, params);
    for (auto backend : simd_backends()) {
      k::set_active_backend(backend);
      EXPECT_LT(rel(model::predict(g, config, params), want), 1e-12);
    }
  }
}
