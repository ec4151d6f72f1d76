#pragma once

#include "comformer/geometry.hpp"

#include <array>
#include <string>
#include <vector>

namespace comformer {

/// Relative tolerance under which two lattice-vector lengths count as a tie.
inline constexpr double kLengthTieTol = 1e-9;
/// |e_a x e_b| threshold on unit vectors for collinearity.
inline constexpr double kCollinearTol = 1e-8;
/// |e_a . (e_b x e_c)| threshold on unit vectors for coplanarity.
inline constexpr double kCoplanarTol = 1e-8;

struct LatticeVector {
  Vec3 vector;
  ImageCoeff coeff{};
  double length = 0.0;
};

/// All nonzero lattice vectors with length <= radius, in canonical order:
/// ascending length; lengths equal within kLengthTieTol (relative) are ordered
/// by lexicographically descending coefficients, so (1,0,0) precedes (0,1,0)
/// and every v precedes -v.
std::vector<LatticeVector> lattice_vectors_within(const Lattice& lattice, double radius);

/// The `count` shortest nonzero lattice vectors in canonical order. The search
/// box grows until every vector tied with the last one returned is enclosed.
std::vector<LatticeVector> enumerate_lattice_vectors(const Lattice& lattice, int count);

/// Periodic-invariant, right-handed lattice representation {e1, e2, e3}.
struct LatticeRepresentation {
  std::array<Vec3, 3> e;
  std::array<ImageCoeff, 3> coeff{};
  /// Set when the choice of some e_m depended on the tie-break rule (distinct
  /// directions of equal length, or a flip decision at exactly 90 degrees).
  /// Periodic invariance is only guaranteed up to that rule on such inputs.
  bool tie_degenerate = false;
  std::string diagnostics;

  /// Rows are e1, e2, e3.
  [[nodiscard]] Mat3 basis() const;
  [[nodiscard]] double det() const { return basis().determinant(); }
};

/// Shortest vector e1; next shortest non-collinear e2 (negated when its angle
/// to e1 exceeds 90 degrees); next shortest non-coplanar e3 (same flip rule);
/// all three negated when det[e1; e2; e3] < 0.
LatticeRepresentation build_lattice_representation(const Lattice& lattice);

}  // namespace comformer
