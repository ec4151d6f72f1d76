#pragma once

#include "comformer/geometry.hpp"
#include "comformer/lattice_repr.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace comformer {

enum class GraphKind { kInvariant, kEquivariant };

std::string_view graph_kind_name(GraphKind kind);

/// Directed edge j' -> i. The edge vector points from the neighbor image to
/// the center: vec = p_i - (p_j + image . L).
struct Edge {
  int src = 0;
  int dst = 0;
  ImageCoeff image{};
  double dist = 0.0;
  /// 0 for k-nearest-neighbor edges; m in 1..3 for the designated lattice
  /// self-edge i -> i carrying image c_m of the lattice representation.
  int slot = 0;
  std::optional<std::array<double, 3>> angles;  // invariant graphs
  std::optional<Vec3> vec;                      // equivariant graphs

  [[nodiscard]] bool is_lattice_edge() const noexcept { return slot != 0; }
};

struct CrystalGraph {
  GraphKind kind = GraphKind::kInvariant;
  std::vector<int> atomic_numbers;
  LatticeRepresentation lattice_repr;
  std::vector<Edge> edges;
  std::vector<double> per_node_radius;
  int k = 0;

  [[nodiscard]] std::size_t num_nodes() const noexcept { return atomic_numbers.size(); }
};

struct Neighbor {
  int src = 0;
  ImageCoeff image{};
  double dist = 0.0;
  Vec3 vec = Vec3::Zero();
};

struct NodeNeighborhood {
  double radius = 0.0;
  std::vector<Neighbor> neighbors;  // every (j, image) with dist <= radius + 1e-9
};

/// Absolute slack under which a neighbor at the k-th distance counts as a tie.
inline constexpr double kRadiusTieSlack = 1e-9;

/// Per-node k-th-nearest periodic neighbor radius and the complete neighbor
/// list within it (ties included). Throws InvalidK when k < 1.
std::vector<NodeNeighborhood> periodic_knn(const Crystal& crystal, int k);

struct BuildOptions {
  /// Throw Disconnected instead of returning a graph that is not connected.
  bool require_connected = true;
};

CrystalGraph build_graph(const Crystal& crystal, int k, GraphKind kind, BuildOptions options = {});
CrystalGraph build_invariant_graph(const Crystal& crystal, int k, BuildOptions options = {});
CrystalGraph build_equivariant_graph(const Crystal& crystal, int k, BuildOptions options = {});

/// Angles between an edge vector and e1, e2, e3.
std::array<double, 3> edge_angles(const Vec3& vec, const LatticeRepresentation& repr);

/// Connectivity over the undirected edge set.
bool is_strongly_connected(const CrystalGraph& graph);

struct GraphComparison {
  bool equal = false;
  /// Largest feature difference among matched edges; +inf when the edge
  /// multisets could not be matched at all.
  double max_deviation = 0.0;
  std::string reason;
};

/// Per-node (index-matched) comparison of incoming edge features
/// (slot, dist, three angles). Equivariant graphs are compared through angles
/// recomputed against their own lattice representation, so the comparison is
/// rotation-invariant. Throws KindMismatch for graphs of different kinds.
GraphComparison compare_graph_features(const CrystalGraph& a, const CrystalGraph& b, double tol);

bool compare_graphs(const CrystalGraph& a, const CrystalGraph& b, double tol);

}  // namespace comformer
