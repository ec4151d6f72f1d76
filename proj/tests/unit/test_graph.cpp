#include "comformer/fixtures.hpp"
#include "comformer/graph.hpp"
#include "comformer/rng.hpp"
#include "comformer/symmetry.hpp"

#include "../support/test_support.hpp"

#include <algorithm>
#include <map>
#include <numbers>

using namespace comformer;
using namespace comformer::testing;

namespace {

constexpr double kPi = std::numbers::pi;

// Brute-force k-th neighbor distance over an image box.
std::vector<double> brute_sorted_distances(const Crystal& c, std::size_t i, int box) {
  std::vector<double> d;
  const auto& p = c.positions();
  for (std::size_t j = 0; j < c.size(); ++j) {
    for (int a = -box; a <= box; ++a) {
      for (int b = -box; b <= box; ++b) {
        for (int e = -box; e <= box; ++e) {
          const double dist = (p[i] - p[j] - c.lattice().image_vector({a, b, e})).norm();
          if (dist > 1e-8) d.push_back(dist);
        }
      }
    }
  }
  std::sort(d.begin(), d.end());
  return d;
}

const Edge* find_edge(const CrystalGraph& g, int dst, int src, const ImageCoeff& image, int slot) {
  for (const auto& e : g.edges) {
    if (e.dst == dst && e.src == src && e.image == image && e.slot == slot) return &e;
  }
  return nullptr;
}

}  // namespace

TEST(PeriodicKnn, CubicFaceShell) {
  const auto nb = periodic_knn(cubic_one(), 6);
  ASSERT_EQ(nb.size(), 1u);
  EXPECT_DOUBLE_EQ(nb[0].radius, 1.0);
  EXPECT_EQ(nb[0].neighbors.size(), 6u);
}

TEST(PeriodicKnn, CubicTiesIncluded) {
  const auto nb = periodic_knn(cubic_one(), 7);
  EXPECT_NEAR(nb[0].radius, std::sqrt(2.0), 1e-15);
  EXPECT_EQ(nb[0].neighbors.size(), 18u);
}

TEST(PeriodicKnn, TwoAtomDiagonal) {
  const Crystal c = make_crystal(Vec3(2, 3, 5).asDiagonal().toDenseMatrix(), {{0, 0, 0}, {0.5, 0, 0}}, {1, 1});
  const auto nb = periodic_knn(c, 1);
  for (int i = 0; i < 2; ++i) {
    EXPECT_DOUBLE_EQ(nb[static_cast<std::size_t>(i)].radius, 1.0);
    for (const auto& n : nb[static_cast<std::size_t>(i)].neighbors) EXPECT_EQ(n.src, 1 - i);
  }
}

TEST(PeriodicKnn, MatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Crystal c = generate({FixtureFamily::kTriclinic, 3, seed});
    for (int k : {1, 5, 12}) {
      const auto nb = periodic_knn(c, k);
      for (std::size_t i = 0; i < c.size(); ++i) {
        const auto d = brute_sorted_distances(c, i, 4);
        EXPECT_NEAR(nb[i].radius, d[static_cast<std::size_t>(k - 1)], 1e-12);
        const auto expected = std::count_if(d.begin(), d.end(), [&](double x) { return x <= nb[i].radius + 1e-9; });
        EXPECT_EQ(static_cast<long>(nb[i].neighbors.size()), expected);
      }
    }
  }
  EXPECT_ERROR_CODE(periodic_knn(cubic_one(), 0), kInvalidK);
}

TEST(InvariantGraph, CubicNineEdges) {
  const CrystalGraph g = build_invariant_graph(cubic_one(), 6);
  EXPECT_EQ(g.kind, GraphKind::kInvariant);
  ASSERT_EQ(g.edges.size(), 9u);
  const Edge* self = find_edge(g, 0, 0, {1, 0, 0}, 1);
  ASSERT_NE(self, nullptr);
  EXPECT_DOUBLE_EQ(self->dist, 1.0);
  EXPECT_NEAR((*self->angles)[0], kPi, 1e-15);
  EXPECT_NEAR((*self->angles)[1], kPi / 2, 1e-15);
  EXPECT_NEAR((*self->angles)[2], kPi / 2, 1e-15);
  const Edge* up = find_edge(g, 0, 0, {0, 0, 1}, 0);
  ASSERT_NE(up, nullptr);
  EXPECT_NEAR((*up->angles)[0], kPi / 2, 1e-15);
  EXPECT_NEAR((*up->angles)[1], kPi / 2, 1e-15);
  EXPECT_NEAR((*up->angles)[2], kPi, 1e-15);
  EXPECT_FALSE(up->vec.has_value());
}

TEST(InvariantGraph, AnglesAreRecomputable) {
  const Crystal c = generate({FixtureFamily::kTriclinic, 6, 9});
  const CrystalGraph g = build_invariant_graph(c, 12);
  const auto& p = c.positions();
  for (const auto& e : g.edges) {
    const Vec3 vec = p[static_cast<std::size_t>(e.dst)] - p[static_cast<std::size_t>(e.src)] - c.lattice().image_vector(e.image);
    EXPECT_NEAR(e.dist, vec.norm(), 1e-12 * vec.norm());
    EXPECT_GT(e.dist, 1e-8);
    for (int m = 0; m < 3; ++m) EXPECT_NEAR((*e.angles)[m], angle_between(vec, g.lattice_repr.e[m]), 1e-12);
  }
}

TEST(InvariantGraph, StructuralInvariants) {
  const Crystal c = generate({FixtureFamily::kTriclinic, 7, 4});
  const int k = 12;
  const CrystalGraph g = build_invariant_graph(c, k);
  std::vector<int> knn(c.size(), 0);
  std::vector<int> slots(c.size(), 0);
  for (const auto& e : g.edges) {
    if (e.slot == 0) {
      ++knn[static_cast<std::size_t>(e.dst)];
    } else {
      EXPECT_EQ(e.src, e.dst);
      EXPECT_EQ(e.image, g.lattice_repr.coeff[static_cast<std::size_t>(e.slot - 1)]);
      ++slots[static_cast<std::size_t>(e.dst)];
    }
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_GE(knn[i], k);
    EXPECT_EQ(slots[i], 3);
  }
  EXPECT_TRUE(is_strongly_connected(g));
}

TEST(EquivariantGraph, CubicVectors) {
  const CrystalGraph g = build_equivariant_graph(cubic_one(), 6);
  const Edge* self = find_edge(g, 0, 0, {1, 0, 0}, 1);
  ASSERT_NE(self, nullptr);
  EXPECT_EQ(*self->vec, Vec3(-1, 0, 0));
  EXPECT_DOUBLE_EQ(self->dist, 1.0);
  EXPECT_FALSE(self->angles.has_value());
}

TEST(EquivariantGraph, SameTopologyAsInvariant) {
  const Crystal c = generate({FixtureFamily::kTriclinic, 5, 12});
  const CrystalGraph a = build_invariant_graph(c, 12);
  const CrystalGraph b = build_equivariant_graph(c, 12);
  ASSERT_EQ(a.edges.size(), b.edges.size());
  for (std::size_t e = 0; e < a.edges.size(); ++e) {
    EXPECT_EQ(a.edges[e].src, b.edges[e].src);
    EXPECT_EQ(a.edges[e].dst, b.edges[e].dst);
    EXPECT_EQ(a.edges[e].image, b.edges[e].image);
    EXPECT_EQ(a.edges[e].slot, b.edges[e].slot);
    for (int m = 0; m < 3; ++m) {
      EXPECT_NEAR((*a.edges[e].angles)[m], angle_between(*b.edges[e].vec, b.lattice_repr.e[m]), 1e-12);
    }
  }
}

TEST(EquivariantGraph, RotationRotatesVectors) {
  const Crystal c = generate({FixtureFamily::kTriclinic, 5, 13});
  const CrystalGraph g = build_equivariant_graph(c, 12);
  Rng rng(99);
  for (int t = 0; t < 20; ++t) {
    const Mat3 r = random_rotation(rng);
    const Vec3 b(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const CrystalGraph h = build_equivariant_graph(apply_isometry(c, r, b), 12);
    ASSERT_EQ(h.edges.size(), g.edges.size());
    // Index-matched by (dst, slot, dist, src); images are frame dependent.
    std::multimap<std::pair<int, int>, Vec3> rotated;
    for (const auto& e : g.edges) rotated.emplace(std::make_pair(e.dst, e.src), r * *e.vec);
    for (const auto& e : h.edges) {
      const auto range = rotated.equal_range({e.dst, e.src});
      double best = 1e300;
      for (auto it = range.first; it != range.second; ++it) best = std::min(best, (it->second - *e.vec).norm());
      EXPECT_LT(best, 1e-9);
    }
  }
}

TEST(CompareGraphs, IdentityIsometryAndMirror) {
  const Crystal c = generate({FixtureFamily::kTriclinic, 6, 21});
  const CrystalGraph g = build_invariant_graph(c, 12);
  EXPECT_TRUE(compare_graphs(g, g, 0.0));
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const Crystal moved = apply_isometry(c, random_rotation(rng), Vec3(rng.uniform(-9, 9), rng.uniform(-9, 9), 0.3));
    EXPECT_TRUE(compare_graphs(g, build_invariant_graph(moved, 12), 1e-9));
  }
  const Crystal chiral = generate({FixtureFamily::kChiralHelix, 4, 1});
  EXPECT_FALSE(compare_graphs(build_invariant_graph(chiral, 12), build_invariant_graph(mirror(chiral, Vec3::UnitZ()), 12), 1e-3));
  EXPECT_ERROR_CODE(compare_graphs(g, build_equivariant_graph(c, 12), 1e-9), kKindMismatch);
}

TEST(CompareGraphs, WrapDoesNotChangeGraph) {
  const Crystal c = make_crystal(Vec3(3, 3.5, 4).asDiagonal().toDenseMatrix(), {{1.3, -0.2, 0.1}, {0.5, 0.5, 2.5}}, {8, 1});
  EXPECT_TRUE(compare_graphs(build_invariant_graph(c, 8), build_invariant_graph(wrap_to_cell(c), 8), 1e-9));
}

TEST(Connectivity, TwoClusterAndSingleNode) {
  EXPECT_TRUE(is_strongly_connected(build_invariant_graph(cubic_one(), 1)));
  const Crystal two = generate({FixtureFamily::kTwoCluster, 6, 0});
  EXPECT_ERROR_CODE(build_invariant_graph(two, 2), kDisconnected);
  BuildOptions loose;
  loose.require_connected = false;
  EXPECT_FALSE(is_strongly_connected(build_invariant_graph(two, 2, loose)));
  EXPECT_TRUE(is_strongly_connected(build_invariant_graph(two, 8)));
}

TEST(GraphBuild, EdgeCountFormula) {
  const Crystal c = generate({FixtureFamily::kTriclinic, 10, 77});
  for (int k : {4, 12, 25}) {
    const CrystalGraph g = build_invariant_graph(c, k);
    const auto nb = periodic_knn(c, k);
    std::size_t extras = 0;
    for (const auto& n : nb) extras += n.neighbors.size() - static_cast<std::size_t>(k);
    EXPECT_EQ(g.edges.size(), c.size() * static_cast<std::size_t>(k) + 3 * c.size() + extras);
  }
}
