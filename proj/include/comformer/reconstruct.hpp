#pragma once

#include "comformer/geometry.hpp"
#include "comformer/graph.hpp"

#include <array>

namespace comformer {

struct ReconstructionReport {
  double rmsd = 0.0;
  double max_pointwise = 0.0;
  /// Largest Cartesian component difference between the aligned bases.
  double lattice_mismatch = 0.0;
  bool success = false;
};

/// Agreement tolerance between alternative placements of one atom (Angstrom).
inline constexpr double kPlacementTol = 1e-8;

/// e1 along +x, e2 in the upper xy half-plane, e3 fixed by right-handedness,
/// from the lengths and mutual angles stored on node 0's lattice self-edges.
/// Errors: MissingSelfEdges, LeftHandedSolution, WrongGraphKind.
std::array<Vec3, 3> rebuild_lattice_from_graph(const CrystalGraph& graph);

/// Relative position of an edge's neighbor image: solves e_m . p = d |e_m| cos(theta_m).
/// The result is the edge vector (center minus neighbor image). Errors: SingularBasis.
Vec3 place_neighbor(const Edge& edge, const std::array<Vec3, 3>& basis);

/// Breadth-first placement from node 0 at the origin. Every edge is then
/// checked for consistency modulo the rebuilt lattice.
/// Errors: Disconnected, InconsistentPlacement, MissingSelfEdges, WrongGraphKind.
Crystal reconstruct_crystal(const CrystalGraph& graph);

/// Same procedure driven directly by edge vectors. The basis is the negated
/// vectors of node 0's lattice self-edges.
Crystal reconstruct_crystal_equivariant(const CrystalGraph& graph);

/// Dispatches on the graph kind.
Crystal reconstruct(const CrystalGraph& graph);

/// Index-matched comparison: positions relative to atom 0, reconstructed
/// lattice representation rotated onto the original one (proper rotation),
/// each atom delta wrapped to its nearest periodic image. Errors: SpeciesMismatch.
ReconstructionReport match_structures(const Crystal& original, const Crystal& reconstructed, double tol = 1e-6);

/// graph -> reconstruction -> match in one call.
ReconstructionReport verify_round_trip(const Crystal& crystal, int k, GraphKind kind, double tol = 1e-6);

}  // namespace comformer
