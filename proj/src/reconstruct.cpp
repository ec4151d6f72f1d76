#include "comformer/reconstruct.hpp"

#include "comformer/error.hpp"
#include "comformer/lattice_repr.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <deque>
#include <numbers>
#include <sstream>

namespace comformer {
namespace {

// cos(pi/2) in doubles is 6e-17, not 0. Snapping keeps orthogonal cells exact.
double stable_cos(double theta) {
  if (std::abs(theta - std::numbers::pi / 2) <= 4e-16) return 0.0;
  return std::cos(theta);
}

std::array<const Edge*, 3> node0_lattice_edges(const CrystalGraph& graph) {
  std::array<const Edge*, 3> found{nullptr, nullptr, nullptr};
  for (const auto& e : graph.edges) {
    if (e.dst == 0 && e.src == 0 && e.slot >= 1 && e.slot <= 3 && !found[static_cast<std::size_t>(e.slot - 1)]) {
      found[static_cast<std::size_t>(e.slot - 1)] = &e;
    }
  }
  for (int m = 0; m < 3; ++m) {
    if (!found[static_cast<std::size_t>(m)]) {
      throw Error(ErrorCode::kMissingSelfEdges, "node 0 has no lattice self-edge for slot " + std::to_string(m + 1));
    }
  }
  return found;
}

void require_kind(const CrystalGraph& graph, GraphKind kind) {
  if (graph.kind != kind) {
    throw Error(ErrorCode::kWrongGraphKind,
                "expected an " + std::string(graph_kind_name(kind)) + " graph, got " +
                    std::string(graph_kind_name(graph.kind)));
  }
  if (graph.num_nodes() == 0) throw Error(ErrorCode::kInvalidCrystal, "graph has no nodes");
}

Mat3 rows_of(const std::array<Vec3, 3>& basis) {
  Mat3 m;
  for (int r = 0; r < 3; ++r) m.row(r) = basis[static_cast<std::size_t>(r)].transpose();
  return m;
}

// Positions from per-edge relative vectors (center minus neighbor image).
Crystal place_all(const CrystalGraph& graph, const std::array<Vec3, 3>& basis, const std::vector<Vec3>& rel) {
  const std::size_t n = graph.num_nodes();
  const Lattice lattice(rows_of(basis));

  std::vector<std::vector<std::pair<std::size_t, bool>>> adjacency(n);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Edge& edge = graph.edges[e];
    if (edge.src < 0 || edge.dst < 0 || static_cast<std::size_t>(edge.src) >= n ||
        static_cast<std::size_t>(edge.dst) >= n) {
      throw Error(ErrorCode::kInvalidCrystal, "edge " + std::to_string(e) + " references a missing node");
    }
    if (edge.src == edge.dst) continue;
    adjacency[static_cast<std::size_t>(edge.src)].emplace_back(e, true);
    adjacency[static_cast<std::size_t>(edge.dst)].emplace_back(e, false);
  }

  const auto reduce = [&](const Vec3& p) {
    Vec3 f = lattice.cart_to_frac(p);
    for (int a = 0; a < 3; ++a) f[a] = wrap_unit(f[a]);
    return lattice.frac_to_cart(f);
  };

  std::vector<Vec3> positions(n, Vec3::Zero());
  std::vector<bool> placed(n, false);
  placed[0] = true;
  std::deque<std::size_t> queue{0};
  std::size_t count = 1;
  while (!queue.empty()) {
    const std::size_t cur = queue.front();
    queue.pop_front();
    for (const auto& [e, forward] : adjacency[cur]) {
      const Edge& edge = graph.edges[e];
      const auto other = static_cast<std::size_t>(forward ? edge.dst : edge.src);
      if (placed[other]) continue;
      positions[other] = reduce(forward ? Vec3(positions[cur] + rel[e]) : Vec3(positions[cur] - rel[e]));
      placed[other] = true;
      ++count;
      queue.push_back(other);
    }
  }
  if (count != n) {
    throw Error(ErrorCode::kDisconnected, "only " + std::to_string(count) + " of " + std::to_string(n) +
                                              " nodes are reachable from node 0; increase k");
  }

  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Edge& edge = graph.edges[e];
    const Vec3 residual = positions[static_cast<std::size_t>(edge.dst)] -
                          positions[static_cast<std::size_t>(edge.src)] - rel[e];
    const double deviation = minimum_image(lattice, residual).norm();
    if (!(deviation <= kPlacementTol)) {
      std::ostringstream msg;
      msg << "edge " << e << " (" << edge.src << " -> " << edge.dst << ") disagrees with the placement by "
          << deviation << " A";
      throw Error(ErrorCode::kInconsistentPlacement, msg.str());
    }
  }
  return Crystal(lattice, std::move(positions), graph.atomic_numbers);
}

}  // namespace

std::array<Vec3, 3> rebuild_lattice_from_graph(const CrystalGraph& graph) {
  require_kind(graph, GraphKind::kInvariant);
  const auto slots = node0_lattice_edges(graph);
  for (const Edge* e : slots) {
    if (!e->angles) throw Error(ErrorCode::kMissingSelfEdges, "lattice self-edge lacks angles");
  }
  const double a = slots[0]->dist;
  const double b = slots[1]->dist;
  const double c = slots[2]->dist;
  // The self-edge vector is -e_m, so cos(e_m, e_n) = -cos(angle stored on slot m against e_n).
  const double theta_ab = (*slots[0]->angles)[1];
  const double cos_gamma = -stable_cos(theta_ab);
  const double sin_gamma = std::sin(theta_ab);
  const double cos_beta = -stable_cos((*slots[0]->angles)[2]);
  const double cos_alpha = -stable_cos((*slots[1]->angles)[2]);
  if (!(sin_gamma > 1e-12)) throw Error(ErrorCode::kLeftHandedSolution, "e1 and e2 are collinear");

  const Vec3 e1(a, 0.0, 0.0);
  const Vec3 e2(b * cos_gamma, b * sin_gamma, 0.0);
  const double x = c * cos_beta;
  const double y = (c * cos_alpha - x * cos_gamma) / sin_gamma;
  const double z2 = c * c - x * x - y * y;
  if (z2 < -1e-9 * c * c) {
    throw Error(ErrorCode::kLeftHandedSolution, "lattice angles admit no real third vector");
  }
  const double z = std::sqrt(std::max(z2, 0.0));
  if (!(z > 1e-10 * c)) throw Error(ErrorCode::kLeftHandedSolution, "rebuilt lattice vectors are coplanar");
  return {e1, e2, Vec3(x, y, z)};
}

Vec3 place_neighbor(const Edge& edge, const std::array<Vec3, 3>& basis) {
  if (!edge.angles) throw Error(ErrorCode::kWrongGraphKind, "edge has no angles");
  const Mat3 rows = rows_of(basis);
  const double scale = basis[0].norm() * basis[1].norm() * basis[2].norm();
  if (!(std::abs(rows.determinant()) > 1e-10 * scale)) {
    throw Error(ErrorCode::kSingularBasis, "lattice representation is coplanar");
  }
  Vec3 rhs;
  for (int m = 0; m < 3; ++m) {
    const auto mi = static_cast<std::size_t>(m);
    rhs[m] = edge.dist * basis[mi].norm() * stable_cos((*edge.angles)[mi]);
  }
  return rows.fullPivLu().solve(rhs);
}

Crystal reconstruct_crystal(const CrystalGraph& graph) {
  const auto basis = rebuild_lattice_from_graph(graph);
  std::vector<Vec3> rel;
  rel.reserve(graph.edges.size());
  for (const auto& e : graph.edges) {
    if (!(e.dist > 0.0) || !std::isfinite(e.dist)) {
      throw Error(ErrorCode::kNonpositiveDistance, "edge distance must be positive");
    }
    rel.push_back(place_neighbor(e, basis));
  }
  return place_all(graph, basis, rel);
}

Crystal reconstruct_crystal_equivariant(const CrystalGraph& graph) {
  require_kind(graph, GraphKind::kEquivariant);
  const auto slots = node0_lattice_edges(graph);
  std::array<Vec3, 3> basis;
  for (std::size_t m = 0; m < 3; ++m) {
    if (!slots[m]->vec) throw Error(ErrorCode::kMissingSelfEdges, "lattice self-edge lacks a vector");
    basis[m] = -*slots[m]->vec;
  }
  if (!(rows_of(basis).determinant() > 0.0)) {
    throw Error(ErrorCode::kLeftHandedSolution, "lattice self-edges of node 0 are not right-handed");
  }
  std::vector<Vec3> rel;
  rel.reserve(graph.edges.size());
  for (const auto& e : graph.edges) {
    if (!e.vec) throw Error(ErrorCode::kWrongGraphKind, "equivariant edge lacks a vector");
    rel.push_back(*e.vec);
  }
  return place_all(graph, basis, rel);
}

Crystal reconstruct(const CrystalGraph& graph) {
  return graph.kind == GraphKind::kInvariant ? reconstruct_crystal(graph) : reconstruct_crystal_equivariant(graph);
}

ReconstructionReport match_structures(const Crystal& original, const Crystal& reconstructed, double tol) {
  if (original.size() != reconstructed.size() || original.species() != reconstructed.species()) {
    throw Error(ErrorCode::kSpeciesMismatch, "structures differ in atom count or species order");
  }
  const auto ro = build_lattice_representation(original.lattice());
  const auto rr = build_lattice_representation(reconstructed.lattice());

  // Rotation-only Procrustes of the reconstructed basis onto the original.
  Mat3 h = Mat3::Zero();
  for (std::size_t m = 0; m < 3; ++m) h += rr.e[m] * ro.e[m].transpose();
  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Mat3 rotation = svd.matrixV() * d * svd.matrixU().transpose();

  ReconstructionReport report;
  for (std::size_t m = 0; m < 3; ++m) {
    const Vec3 diff = rotation * rr.e[m] - ro.e[m];
    report.lattice_mismatch = std::max(report.lattice_mismatch, diff.cwiseAbs().maxCoeff());
  }
  const Vec3 o0 = original.positions().front();
  const Vec3 r0 = reconstructed.positions().front();
  double sum = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    const Vec3 moved = rotation * (reconstructed.positions()[i] - r0);
    const Vec3 delta = minimum_image(original.lattice(), moved - (original.positions()[i] - o0));
    const double dist = delta.norm();
    sum += dist * dist;
    report.max_pointwise = std::max(report.max_pointwise, dist);
  }
  report.rmsd = std::sqrt(sum / static_cast<double>(original.size()));
  report.rmsd = std::min(report.rmsd, report.max_pointwise);
  report.success = report.rmsd < tol;
  return report;
}

ReconstructionReport verify_round_trip(const Crystal& crystal, int k, GraphKind kind, double tol) {
  return match_structures(crystal, reconstruct(build_graph(crystal, k, kind)), tol);
}

}  // namespace comformer
