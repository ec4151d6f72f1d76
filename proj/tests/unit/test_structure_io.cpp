#include "comformer/fixtures.hpp"
#include "comformer/graph.hpp"
#include "comformer/rng.hpp"
#include "comformer/structure_io.hpp"

#include "../support/test_support.hpp"

#include <json.hpp>

#include <numbers>

using namespace comformer;
using namespace comformer::testing;

namespace {

const char* kRocksalt = R"(NaCl rocksalt
1.0
5.64 0 0
0 5.64 0
0 0 5.64
Na Cl
4 4
Direct
0 0 0
0.5 0.5 0
0.5 0 0.5
0 0.5 0.5
0.5 0 0
0 0.5 0
0 0 0.5
0.5 0.5 0.5
)";

void expect_same_crystal(const Crystal& a, const Crystal& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.species(), b.species());
  EXPECT_EQ(a.lattice().matrix(), b.lattice().matrix());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(max_abs_diff(a.positions()[i], b.positions()[i]), 1e-13);
}

}  // namespace

TEST(Poscar, ParsesRocksalt) {
  const auto doc = parse_poscar(kRocksalt);
  EXPECT_EQ(doc.comment, "NaCl rocksalt");
  ASSERT_EQ(doc.crystal.size(), 8u);
  EXPECT_EQ(doc.crystal.species(), (std::vector<int>{11, 11, 11, 11, 17, 17, 17, 17}));
  EXPECT_LT(max_abs_diff(doc.crystal.positions()[7], {2.82, 2.82, 2.82}), 1e-14);
  EXPECT_NEAR(doc.crystal.lattice().det(), 5.64 * 5.64 * 5.64, 1e-10);
}

TEST(Poscar, NegativeScaleIsVolume) {
  const auto doc = parse_poscar("cube\n-10.0\n1 0 0\n0 1 0\n0 0 1\nH\n1\nDirect\n0 0 0\n");
  EXPECT_NEAR(doc.crystal.lattice().det(), 10.0, 1e-12);
}

TEST(Poscar, CountMismatch) {
  EXPECT_ERROR_CODE(parse_poscar("x\n1\n1 0 0\n0 1 0\n0 0 1\nH He\n2 3\nDirect\n0 0 0\n0.1 0 0\n0.2 0 0\n0.3 0 0\n"),
                    kCountMismatch);
}

TEST(Poscar, CartesianAndSelectiveDynamics) {
  const auto doc = parse_poscar(
      "sd\n2.0\n1 0 0\n0 1 0\n0 0 1\nO\n1\nSelective dynamics\nCartesian\n0.5 0.25 0 T F T\n");
  EXPECT_LT(max_abs_diff(doc.crystal.positions()[0], {1.0, 0.5, 0}), 1e-15);
  EXPECT_ERROR_CODE(parse_poscar("sd\n1\n1 0 0\n0 1 0\n0 0 1\nO\n1\nSelective\nDirect\n0 0 0 T X T\n"),
                    kMalformedHeader);
}

TEST(Poscar, Vasp4SpeciesFromComment) {
  const auto doc = parse_poscar("Si O\n1\n4 0 0\n0 4 0\n0 0 4\n1 2\nDirect\n0 0 0\n0.5 0 0\n0 0.5 0\n");
  EXPECT_EQ(doc.crystal.species(), (std::vector<int>{14, 8, 8}));
  EXPECT_ERROR_CODE(parse_poscar("no symbols\n1\n4 0 0\n0 4 0\n0 0 4\n1\nDirect\n0 0 0\n"), kUnknownSpecies);
  EXPECT_ERROR_CODE(parse_poscar("x\n1\n4 0 0\n0 4 0\n0 0 4\nXx\n1\nDirect\n0 0 0\n"), kUnknownSpecies);
}

TEST(Poscar, RejectsTrailingBlocks) {
  EXPECT_ERROR_CODE(parse_poscar("x\n1\n1 0 0\n0 1 0\n0 0 1\nH\n1\nDirect\n0 0 0\n\n0 0 0\n"), kMalformedHeader);
  EXPECT_ERROR_CODE(parse_poscar("x\n1 2\n1 0 0\n0 1 0\n0 0 1\nH\n1\nDirect\n0 0 0\n"), kMalformedHeader);
  EXPECT_ERROR_CODE(parse_poscar("x\n1\n1 0 0\n2 0 0\n0 0 1\nH\n1\nDirect\n0 0 0\n"), kSingularLattice);
}

TEST(Poscar, RoundTrip) {
  for (const char* text : {kRocksalt, "cube\n-10.0\n1 0 0\n0 1 0\n0 0 1\nH\n1\nDirect\n0 0 0\n"}) {
    const auto doc = parse_poscar(text);
    const auto again = parse_poscar(write_poscar(doc));
    expect_same_crystal(doc.crystal, again.crystal);
    EXPECT_EQ(doc.comment, again.comment);
  }
}

TEST(Poscar, EmptyCommentAndPoGolden) {
  StructureDocument doc{cubic_one(3.35), "", std::nullopt};
  const std::string text = write_poscar(doc);
  EXPECT_EQ(text.substr(0, 1), "\n");
  EXPECT_EQ(text, "\n1.0\n  3.35 0 0\n  0 3.35 0\n  0 0 3.35\nPo\n1\nDirect\n  0 0 0\n");
  expect_same_crystal(parse_poscar(text).crystal, doc.crystal);
}

TEST(Poscar, InterleavedSpeciesKeepOrder) {
  const Crystal c = make_crystal(4 * Mat3::Identity(), {{0, 0, 0}, {0.5, 0, 0}, {0, 0.5, 0}}, {8, 14, 8});
  const auto again = parse_poscar(write_poscar({c, "mixed", std::nullopt}));
  EXPECT_EQ(again.crystal.species(), c.species());
}

TEST(CrystalJson, RoundTripAndErrors) {
  const Crystal c = generate({FixtureFamily::kTriclinic, 5, 42});
  const StructureDocument doc{c, "tri", std::nullopt};
  const auto again = parse_crystal_json(write_crystal_json(doc));
  expect_same_crystal(c, again.crystal);
  EXPECT_EQ(again.comment, "tri");
  EXPECT_ERROR_CODE(parse_crystal_json(R"({"cart_positions": [[0,0,0]], "atomic_numbers": [1]})"), kSchemaViolation);
  EXPECT_ERROR_CODE(parse_crystal_json(R"({"lattice": [[1,0,0],[0,1,0],[0,0,1]], "cart_positions": [], "atomic_numbers": []})"),
                    kSchemaViolation);
  EXPECT_ERROR_CODE(parse_crystal_json("{"), kSchemaViolation);
}

TEST(GraphJson, RoundTripCubic) {
  for (GraphKind kind : {GraphKind::kInvariant, GraphKind::kEquivariant}) {
    const CrystalGraph g = build_graph(cubic_one(), 6, kind);
    const CrystalGraph again = parse_graph_json(write_graph_json(g));
    ASSERT_EQ(again.edges.size(), g.edges.size());
    EXPECT_EQ(again.kind, g.kind);
    EXPECT_EQ(write_graph_json(again), write_graph_json(g));
    EXPECT_TRUE(compare_graphs(g, again, 0.0));
  }
}

TEST(GraphJson, KindMismatch) {
  const std::string text = R"({"kind": "invariant", "atomic_numbers": [1],
    "lattice_repr": {"e1": [1,0,0], "e2": [0,1,0], "e3": [0,0,1]}, "k": 1, "edges": [
    {"src": 0, "dst": 0, "image": [1,0,0], "dist": 1.0, "vec": [-1,0,0]}]})";
  EXPECT_ERROR_CODE(parse_graph_json(text), kKindMismatch);
  EXPECT_ERROR_CODE(parse_graph_json(R"({"kind": "weird"})"), kSchemaViolation);
}

TEST(GraphJson, DiagonalGolden) {
  // Two atoms in diag(2,3,5); k=1 gives one kNN edge per atom plus the self-edges.
  const Crystal c = make_crystal(Vec3(2, 3, 5).asDiagonal().toDenseMatrix(), {{0, 0, 0}, {0.5, 0, 0}}, {11, 17});
  const CrystalGraph g = build_invariant_graph(c, 1);
  const std::string text = write_graph_json(g);
  const auto doc = nlohmann::json::parse(text);
  EXPECT_EQ(doc["kind"], "invariant");
  EXPECT_EQ(doc["atomic_numbers"], nlohmann::json::parse("[11,17]"));
  EXPECT_EQ(doc["lattice_repr"]["e1"], nlohmann::json::parse("[2.0,0.0,0.0]"));
  EXPECT_EQ(doc["lattice_repr"]["e2"], nlohmann::json::parse("[0.0,3.0,0.0]"));
  EXPECT_EQ(doc["lattice_repr"]["e3"], nlohmann::json::parse("[0.0,0.0,5.0]"));
  // Atom 0's two nearest neighbors are atom 1 at +-1 along x (a tie, so both).
  ASSERT_EQ(doc["edges"].size(), 2u * (2 + 3));
  const auto& first = doc["edges"][0];
  EXPECT_EQ(first["dst"], 0);
  EXPECT_EQ(first["src"], 1);
  EXPECT_EQ(first["dist"], 1.0);
  EXPECT_EQ(parse_graph_json(text).edges.size(), g.edges.size());
}

TEST(StructureFiles, SniffAndMissingFile) {
  const auto doc = parse_structure(write_crystal_json({cubic_one(), "c", std::nullopt}));
  EXPECT_EQ(doc.crystal.size(), 1u);
  EXPECT_EQ(parse_structure(kRocksalt).crystal.size(), 8u);
  EXPECT_ERROR_CODE(read_structure_file("/nonexistent/file.vasp"), kIoError);
}

TEST(Parsers, RandomBytesGiveTypedErrors) {
  Rng rng(2024);
  for (int t = 0; t < 500; ++t) {
    std::string bytes(static_cast<std::size_t>(rng.uniform_int(0, 200)), '\0');
    for (auto& ch : bytes) ch = static_cast<char>(rng.uniform_int(0, 255));
    for (auto* parse : {+[](std::string_view s) { parse_poscar(s); }, +[](std::string_view s) { parse_crystal_json(s); },
                        +[](std::string_view s) { parse_graph_json(s); }}) {
      try {
        parse(bytes);
      } catch (const Error&) {
      }
    }
  }
  SUCCEED();
}
