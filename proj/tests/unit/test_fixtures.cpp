#include "comformer/fixtures.hpp"
#include "comformer/graph.hpp"
#include "comformer/symmetry.hpp"

#include "../support/test_support.hpp"

#include <algorithm>
#include <set>

using namespace comformer;
using namespace comformer::testing;

namespace {

// Per-atom sorted neighbor distances (1e-6 resolution) plus species; blind to
// how the cell is described.
std::multiset<std::vector<long long>> fingerprint(const Crystal& c, int k) {
  const auto nb = periodic_knn(c, k);
  std::multiset<std::vector<long long>> out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::vector<long long> dists;
    for (const auto& n : nb[i].neighbors) dists.push_back(std::llround(n.dist * 1e6));
    std::sort(dists.begin(), dists.end());
    dists.push_back(c.species()[i]);
    out.insert(dists);
  }
  return out;
}

}  // namespace

TEST(Fixtures, PoloniumCube) {
  const Crystal c = generate({FixtureFamily::kCubic, 1, 0});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.species()[0], 84);
  EXPECT_NEAR(c.lattice().volume(), 3.35 * 3.35 * 3.35, 1e-12);
}

TEST(Fixtures, Reproducible) {
  for (auto family : {FixtureFamily::kCubic, FixtureFamily::kOrthorhombic, FixtureFamily::kTriclinic,
                      FixtureFamily::kChiralHelix, FixtureFamily::kTwoCluster, FixtureFamily::kRocksalt,
                      FixtureFamily::kSupercell}) {
    const FixtureSpec spec{family, 6, 1234, 0.01};
    const Crystal a = generate(spec);
    const Crystal b = generate(spec);
    EXPECT_EQ(a.lattice().matrix(), b.lattice().matrix());
    EXPECT_EQ(a.positions(), b.positions());
    EXPECT_EQ(a.species(), b.species());
  }
}

TEST(Fixtures, MinimumSeparationAndConditioning) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    for (auto family : {FixtureFamily::kCubic, FixtureFamily::kOrthorhombic, FixtureFamily::kTriclinic}) {
      const Crystal c = generate({family, 1 + static_cast<int>(seed % 20), seed});
      const auto nb = periodic_knn(c, 1);
      for (const auto& n : nb) EXPECT_GE(n.radius, kMinSeparation);
      const Mat3 m = c.lattice().matrix();
      const Eigen::SelfAdjointEigenSolver<Mat3> eig(m.transpose() * m);
      EXPECT_LE(std::sqrt(eig.eigenvalues()[2] / eig.eigenvalues()[0]), kMaxConditionNumber + 1e-9);
    }
  }
}

TEST(Fixtures, SupercellSameInfiniteStructure) {
  const Crystal base = generate({FixtureFamily::kCubic, 1, 0});
  const Crystal super = make_supercell(base, 2);
  EXPECT_EQ(super.size(), 8u);
  EXPECT_NEAR(super.lattice().volume(), 8 * base.lattice().volume(), 1e-9);
  const Crystal tri = generate({FixtureFamily::kTriclinic, 3, 8});
  const auto fp_base = fingerprint(tri, 12);
  const auto fp_super = fingerprint(make_supercell(tri, 2), 12);
  for (const auto& row : fp_base) EXPECT_EQ(fp_super.count(row), 8 * fp_base.count(row));
  EXPECT_ERROR_CODE(make_supercell(tri, 0), kInvalidSpec);
}

TEST(Fixtures, TwoClusterConnectivity) {
  const Crystal c = generate({FixtureFamily::kTwoCluster, 6, 0});
  EXPECT_ERROR_CODE(build_invariant_graph(c, 2), kDisconnected);
  EXPECT_NO_THROW(build_invariant_graph(c, 8));
}

TEST(Fixtures, ChiralHelixIsChiral) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Crystal c = generate({FixtureFamily::kChiralHelix, 4, seed});
    EXPECT_FALSE(is_superimposable(c, mirror(c, Vec3::UnitZ()), 1e-4));
  }
}

TEST(Fixtures, JitterKeepsConnectivity) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Crystal c = generate({FixtureFamily::kTriclinic, 8, seed, 0.05});
    EXPECT_TRUE(is_strongly_connected(build_invariant_graph(c, 12)));
  }
}

TEST(Fixtures, NamesRoundTrip) {
  for (auto family : {FixtureFamily::kCubic, FixtureFamily::kChiralHelix, FixtureFamily::kSupercell}) {
    EXPECT_EQ(fixture_family_from_name(fixture_family_name(family)), family);
  }
  EXPECT_EQ(fixture_family_from_name("triclinic-random"), FixtureFamily::kTriclinic);
  EXPECT_FALSE(fixture_family_from_name("nope").has_value());
  EXPECT_ERROR_CODE(generate({FixtureFamily::kTriclinic, 0, 1}), kInvalidSpec);
}
