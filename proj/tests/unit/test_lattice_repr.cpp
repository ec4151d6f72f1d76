#include "comformer/lattice_repr.hpp"
#include "comformer/rng.hpp"
#include "comformer/symmetry.hpp"

#include "../support/test_support.hpp"

#include <algorithm>
#include <numbers>

using namespace comformer;
using namespace comformer::testing;

namespace {

struct Brute {
  Vec3 v;
  ImageCoeff c;
  double len;
};

// Box enumeration with an explicit sort, independent of the library's search.
std::vector<Brute> brute_vectors(const Lattice& l, int box) {
  std::vector<Brute> out;
  for (int a = -box; a <= box; ++a) {
    for (int b = -box; b <= box; ++b) {
      for (int c = -box; c <= box; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        const Vec3 v = l.image_vector({a, b, c});
        out.push_back({v, {a, b, c}, v.norm()});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Brute& x, const Brute& y) {
    if (std::abs(x.len - y.len) > 1e-9 * std::max(x.len, y.len)) return x.len < y.len;
    return x.c > y.c;
  });
  return out;
}

// Replays the selection rules over the brute-force list.
std::array<Vec3, 3> brute_repr(const Lattice& l) {
  const auto all = brute_vectors(l, 4);
  const Vec3 e1 = all[0].v;
  Vec3 e2;
  Vec3 e3;
  std::size_t i = 1;
  for (; i < all.size(); ++i) {
    if (e1.normalized().cross(all[i].v.normalized()).norm() > 1e-8) {
      e2 = all[i].v;
      break;
    }
  }
  for (++i; i < all.size(); ++i) {
    if (std::abs(e1.normalized().dot(e2.normalized().cross(all[i].v.normalized()))) > 1e-8) {
      e3 = all[i].v;
      break;
    }
  }
  if (e1.dot(e2) < 0) e2 = -e2;
  if (e1.dot(e3) < 0) e3 = -e3;
  std::array<Vec3, 3> e{e1, e2, e3};
  if (e1.dot(e2.cross(e3)) < 0) {
    for (auto& v : e) v = -v;
  }
  return e;
}

Mat3 random_lattice(Rng& rng) {
  while (true) {
    Mat3 m = Mat3::Identity();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        if (r != c) m(r, c) = rng.uniform(-0.35, 0.35);
      }
    }
    m = m * Vec3(1, rng.uniform(1.05, 1.6), rng.uniform(1.05, 1.9)).asDiagonal();
    if (std::abs(m.determinant()) > 0.3) return m;
  }
}

void expect_repr_near(const LatticeRepresentation& a, const LatticeRepresentation& b, double tol) {
  for (int m = 0; m < 3; ++m) EXPECT_LT(max_abs_diff(a.e[m], b.e[m]), tol) << "e" << m + 1;
}

}  // namespace

TEST(EnumerateLatticeVectors, DiagonalPair) {
  const Lattice l(Vec3(2, 3, 5).asDiagonal().toDenseMatrix());
  const auto v = enumerate_lattice_vectors(l, 2);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].vector, Vec3(2, 0, 0));
  EXPECT_EQ(v[0].coeff, (ImageCoeff{1, 0, 0}));
  EXPECT_EQ(v[1].vector, Vec3(-2, 0, 0));
  EXPECT_EQ(v[1].coeff, (ImageCoeff{-1, 0, 0}));
}

TEST(EnumerateLatticeVectors, CubicSixFaces) {
  const auto v = enumerate_lattice_vectors(Lattice(Mat3::Identity()), 6);
  ASSERT_EQ(v.size(), 6u);
  const std::vector<ImageCoeff> expected{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, -1}, {0, -1, 0}, {-1, 0, 0}};
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(v[i].coeff, expected[i]);
    EXPECT_DOUBLE_EQ(v[i].length, 1.0);
  }
}

TEST(EnumerateLatticeVectors, SkewedShortestIsNotARow) {
  const Lattice l(rows_of({1, 0, 0}, {0.9, 0.1, 0}, {0, 0, 1}));
  const auto v = enumerate_lattice_vectors(l, 1);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NEAR(v[0].length, std::sqrt(0.02), 1e-12);
  // +-(l2 - l1); the tie-break keeps the coefficient vector with the larger leading entry.
  EXPECT_EQ(v[0].coeff, (ImageCoeff{1, -1, 0}));
  EXPECT_LT(max_abs_diff(v[0].vector, {0.1, -0.1, 0}), 1e-15);
}

TEST(EnumerateLatticeVectors, MatchesBruteForce) {
  Rng rng(17);
  for (int t = 0; t < 30; ++t) {
    const Lattice l(random_lattice(rng));
    const auto got = enumerate_lattice_vectors(l, 30);
    const auto want = brute_vectors(l, 6);
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_NEAR(got[i].length, want[i].len, 1e-12);
      EXPECT_EQ(got[i].coeff, want[i].c);
    }
  }
}

TEST(LatticeRepresentation, Diagonal) {
  const auto r = build_lattice_representation(Lattice(Vec3(2, 3, 5).asDiagonal().toDenseMatrix()));
  EXPECT_EQ(r.e[0], Vec3(2, 0, 0));
  EXPECT_EQ(r.e[1], Vec3(0, 3, 0));
  EXPECT_EQ(r.e[2], Vec3(0, 0, 5));
  EXPECT_NEAR(r.det(), 30.0, 1e-12);
  // Right angles leave the sign of e2 and e3 to the tie-break rule.
  EXPECT_TRUE(r.tie_degenerate);
  const auto skew = build_lattice_representation(Lattice(rows_of({3, 0, 0}, {0.4, 3.3, 0}, {0.2, -0.3, 3.7})));
  EXPECT_FALSE(skew.tie_degenerate) << skew.diagnostics;
}

TEST(LatticeRepresentation, CubicTieBreak) {
  const auto r = build_lattice_representation(Lattice(Mat3::Identity()));
  EXPECT_EQ(r.e[0], Vec3(1, 0, 0));
  EXPECT_EQ(r.e[1], Vec3(0, 1, 0));
  EXPECT_EQ(r.e[2], Vec3(0, 0, 1));
  EXPECT_TRUE(r.tie_degenerate);
}

TEST(LatticeRepresentation, ShearedExampleAndRedescription) {
  const Mat3 rows = rows_of({1, 0, 0}, {-0.6, 1, 0}, {0, 0, 1.2});
  const auto r = build_lattice_representation(Lattice(rows));
  EXPECT_LT(max_abs_diff(r.e[0], {1, 0, 0}), 1e-15);
  EXPECT_LT(max_abs_diff(r.e[1], {0.4, 1, 0}), 1e-15);
  EXPECT_LT(max_abs_diff(r.e[2], {0, 0, 1.2}), 1e-15);
  EXPECT_GT(r.det(), 0);
  const Mat3 redescribed = rows_of({1, 0, 0}, {0.4, 1, 0}, {0, 0, 1.2});
  expect_repr_near(build_lattice_representation(Lattice(redescribed)), r, 1e-12);
}

TEST(LatticeRepresentation, MatchesBruteForceReplay) {
  Rng rng(23);
  for (int t = 0; t < 50; ++t) {
    const Lattice l(random_lattice(rng));
    const auto r = build_lattice_representation(l);
    if (r.tie_degenerate) continue;
    const auto e = brute_repr(l);
    for (int m = 0; m < 3; ++m) EXPECT_LT(max_abs_diff(r.e[m], e[m]), 1e-12);
  }
}

TEST(LatticeRepresentation, InvariantsHold) {
  Rng rng(29);
  for (int t = 0; t < 100; ++t) {
    const Lattice l(random_lattice(rng));
    const auto r = build_lattice_representation(l);
    // Integer coefficients reproduce the vectors.
    for (int m = 0; m < 3; ++m) {
      const Vec3 f = l.cart_to_frac(r.e[m]);
      EXPECT_LT((f - f.array().round().matrix()).norm(), 1e-8);
      EXPECT_LT(max_abs_diff(l.image_vector(r.coeff[m]), r.e[m]), 1e-12);
    }
    EXPECT_GE(r.e[0].dot(r.e[1]), -1e-12 * r.e[0].norm() * r.e[1].norm());
    EXPECT_GE(r.e[0].dot(r.e[2]), -1e-12 * r.e[0].norm() * r.e[2].norm());
    EXPECT_GT(r.det(), 0);
    EXPECT_NEAR(r.det(), l.volume(), 1e-9 * l.volume());
  }
}

TEST(LatticeRepresentation, RotationEquivariance) {
  Rng rng(31);
  const Mat3 rows = random_lattice(rng);
  const auto base = build_lattice_representation(Lattice(rows));
  for (int t = 0; t < 100; ++t) {
    const Mat3 rot = random_rotation(rng);
    const auto r = build_lattice_representation(Lattice(rows * rot.transpose()));
    for (int m = 0; m < 3; ++m) EXPECT_LT(max_abs_diff(r.e[m], rot * base.e[m]), 1e-9);
  }
}

TEST(LatticeRepresentation, PeriodicInvariance) {
  Rng rng(37);
  int checked = 0;
  for (int s = 0; s < 5; ++s) {
    const Mat3 rows = random_lattice(rng);
    const auto base = build_lattice_representation(Lattice(rows));
    if (base.tie_degenerate) continue;
    for (int t = 0; t < 100; ++t) {
      const IntMat3 u = random_unimodular(rng);
      ASSERT_EQ(u.cast<double>().determinant(), 1.0);
      const auto r = build_lattice_representation(Lattice(u.cast<double>() * rows));
      expect_repr_near(r, base, 1e-9);
      ++checked;
    }
  }
  EXPECT_GE(checked, 300);
}

TEST(LatticeRepresentation, MirroredLatticeIsARotation) {
  // Every lattice is centrosymmetric, so a reflected lattice is a rotated copy
  // of the original: chirality can only come from the atom basis.
  Rng rng(41);
  const Mat3 rows = random_lattice(rng);
  const auto base = build_lattice_representation(Lattice(rows));
  const Mat3 s = Vec3(-1, 1, 1).asDiagonal();
  const auto mirrored = build_lattice_representation(Lattice(rows * s));
  EXPECT_GT(mirrored.det(), 0);
  const Mat3 r = mirrored.basis().transpose() * base.basis().transpose().inverse();
  EXPECT_TRUE(is_proper_rotation(r, 1e-9));
}

TEST(LatticeRepresentation, FlipAtExactlyNinetyIsNotFlipped) {
  const auto r = build_lattice_representation(Lattice(Vec3(1, 2, 3).asDiagonal().toDenseMatrix()));
  EXPECT_EQ(r.e[1], Vec3(0, 2, 0));
  EXPECT_EQ(r.e[2], Vec3(0, 0, 3));
}
