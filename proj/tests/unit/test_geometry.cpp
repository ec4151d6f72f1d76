#include "comformer/geometry.hpp"
#include "comformer/rng.hpp"

#include "../support/test_support.hpp"

#include <numbers>

using namespace comformer;
using namespace comformer::testing;

TEST(Lattice, FracToCartDiagonal) {
  const Lattice l(Vec3(2, 3, 5).asDiagonal().toDenseMatrix());
  EXPECT_LT(max_abs_diff(l.frac_to_cart({0.5, 0.5, 0.5}), {1, 1.5, 2.5}), 1e-15);
  EXPECT_LT(max_abs_diff(l.frac_to_cart(Vec3::Zero()), Vec3::Zero()), 1e-15);
  EXPECT_LT(max_abs_diff(l.cart_to_frac({1, 0, 0}), {0.5, 0, 0}), 1e-15);
  EXPECT_LT(max_abs_diff(l.cart_to_frac({1, 1.5, 2.5}), {0.5, 0.5, 0.5}), 1e-15);
}

TEST(Lattice, FracToCartSheared) {
  const Lattice l(rows_of({1, 0, 0}, {1, 1, 0}, {0, 0, 1}));
  EXPECT_LT(max_abs_diff(l.frac_to_cart({1, 1, 0}), {2, 1, 0}), 1e-15);
  EXPECT_LT(max_abs_diff(l.cart_to_frac({2, 1, 0}), {1, 1, 0}), 1e-15);
}

TEST(Lattice, RoundTripRandom) {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    Mat3 m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = rng.uniform(-3, 3);
    if (std::abs(m.determinant()) < 0.1) continue;
    const Lattice l(m);
    const Vec3 v(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    EXPECT_LT((l.frac_to_cart(l.cart_to_frac(v)) - v).norm(), 1e-12 * std::max(1.0, v.norm()));
  }
}

TEST(Lattice, RejectsDegenerate) {
  EXPECT_ERROR_CODE(Lattice(rows_of({1, 0, 0}, {2, 0, 0}, {0, 0, 1})), kSingularLattice);
  Mat3 nan_rows = Mat3::Identity();
  nan_rows(1, 1) = std::nan("");
  EXPECT_ERROR_CODE(Lattice{nan_rows}, kSingularLattice);
}

TEST(Crystal, Invariants) {
  const Lattice l(Mat3::Identity());
  EXPECT_ERROR_CODE(Crystal(l, {}, {}), kInvalidCrystal);
  EXPECT_ERROR_CODE(Crystal(l, {Vec3::Zero()}, {1, 2}), kInvalidCrystal);
  EXPECT_ERROR_CODE(Crystal(l, {Vec3::Zero()}, {0}), kInvalidCrystal);
  EXPECT_ERROR_CODE(Crystal(l, {Vec3(std::nan(""), 0, 0)}, {1}), kInvalidCrystal);
}

TEST(WrapToCell, MovesIntoUnitCell) {
  const Crystal c = make_crystal(Vec3(2, 3, 5).asDiagonal().toDenseMatrix(), {{1.25, -0.5, 0}, {0.1, 0.2, 0.3}}, {1, 1});
  const Crystal w = wrap_to_cell(c);
  const Vec3 f0 = w.lattice().cart_to_frac(w.positions()[0]);
  EXPECT_LT(max_abs_diff(f0, {0.25, 0.5, 0}), 1e-12);
  EXPECT_LT(max_abs_diff(w.positions()[1], c.positions()[1]), 1e-15);
  const Crystal ww = wrap_to_cell(w);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(ww.positions()[i], w.positions()[i]);
}

TEST(AngleBetween, Examples) {
  EXPECT_NEAR(angle_between({1, 1, 0}, {1, 0, 0}), std::numbers::pi / 4, 1e-15);
  EXPECT_NEAR(std::cos(angle_between({1, 1, 0}, {1, 0, 0})), 0.70710678, 1e-8);
  EXPECT_DOUBLE_EQ(angle_between({1, 0, 0}, {-1, 0, 0}), std::numbers::pi);
  EXPECT_DOUBLE_EQ(angle_between({1, 2, 2}, {2, 1, -2}), std::numbers::pi / 2);
  EXPECT_ERROR_CODE(angle_between({0, 0, 0}, {1, 0, 0}), kZeroVector);
}

TEST(AngleBetween, SymmetricAndRotationInvariant) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const Vec3 a(rng.normal(), rng.normal(), rng.normal());
    const Vec3 b(rng.normal(), rng.normal(), rng.normal());
    const Mat3 r = random_rotation(rng);
    EXPECT_EQ(angle_between(a, b), angle_between(b, a));
    EXPECT_NEAR(angle_between(r * a, r * b), angle_between(a, b), 1e-12);
  }
}

TEST(Kabsch, IdentityAndExactRotation) {
  const std::vector<Vec3> x{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {0, 0, 3}};
  const auto id = kabsch_align(x, x);
  EXPECT_LT(id.rmsd, 1e-14);
  EXPECT_LT((id.rotation - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT(id.translation.norm(), 1e-12);

  const std::vector<Vec3> a{{0, 0, 0}, {1, 0, 0}};
  const std::vector<Vec3> b{{0, 0, 0}, {0, 1, 0}};
  EXPECT_LT(kabsch_align(a, b).rmsd, 1e-12);
  EXPECT_ERROR_CODE(kabsch_align(a, x), kLengthMismatch);
}

TEST(Kabsch, RandomIsometries) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    std::vector<Vec3> x(8);
    for (auto& p : x) p = Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    const Mat3 r = random_rotation(rng);
    const Vec3 shift(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
    std::vector<Vec3> y;
    for (const auto& p : x) y.push_back(r * p + shift);
    const auto fit = kabsch_align(x, y);
    EXPECT_LT(fit.rmsd, 1e-10);
    EXPECT_NEAR(fit.rotation.determinant(), 1.0, 1e-12);
  }
}

TEST(Kabsch, NeverReflects) {
  // A tetrahedron and its mirror image cannot be superposed by a proper rotation.
  const std::vector<Vec3> x{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {0, 0, 3}};
  std::vector<Vec3> y;
  for (const auto& p : x) y.push_back({-p.x(), p.y(), p.z()});
  const auto fit = kabsch_align(x, y);
  EXPECT_GT(fit.rmsd, 0.1);
  EXPECT_NEAR(fit.rotation.determinant(), 1.0, 1e-12);
}

TEST(RandomRotation, ProperAndSeeded) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Mat3 r = random_rotation(seed);
    EXPECT_TRUE(is_proper_rotation(r));
    EXPECT_LT((r * r.transpose() - Mat3::Identity()).norm(), 1e-14);
    EXPECT_EQ(random_rotation(seed), r);
  }
}

TEST(RandomRotation, GoldenSeed7) {
  Mat3 want;
  want << 0.76743910895892364, 0.22619844234391237, 0.59989288937402918, -0.53868014625845118, -0.27988150028320069,
      0.794663479610205, 0.34765056316264908, -0.9330062221016604, -0.092943399186173892;
  EXPECT_LT((random_rotation(std::uint64_t{7}) - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MinimumImage, ShortestRepresentative) {
  const Lattice l(rows_of({1, 0, 0}, {0.9, 0.1, 0}, {0, 0, 1}));
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const Vec3 d(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4));
    const Vec3 m = minimum_image(l, d);
    // Brute force over a wide box.
    double best = 1e300;
    for (int a = -40; a <= 40; ++a) {
      for (int b = -40; b <= 40; ++b) {
        for (int c = -6; c <= 6; ++c) best = std::min(best, (d + l.image_vector({a, b, c})).norm());
      }
    }
    EXPECT_NEAR(m.norm(), best, 1e-12);
    const Vec3 f = l.cart_to_frac(m - d);
    EXPECT_LT((f - f.array().round().matrix()).norm(), 1e-9);
  }
}
