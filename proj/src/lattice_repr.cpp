#include "comformer/lattice_repr.hpp"

#include "comformer/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace comformer {
namespace {

bool lengths_tied(double a, double b) {
  return std::abs(a - b) <= kLengthTieTol * std::max(a, b);
}

void canonical_sort(std::vector<LatticeVector>& vectors) {
  std::sort(vectors.begin(), vectors.end(), [](const LatticeVector& a, const LatticeVector& b) {
    if (a.length != b.length) return a.length < b.length;
    return a.coeff > b.coeff;
  });
  // Lengths of symmetry-equivalent vectors can differ in the last bits, so
  // runs of tied lengths are re-ordered by coefficient alone.
  std::size_t start = 0;
  while (start < vectors.size()) {
    std::size_t end = start + 1;
    while (end < vectors.size() && lengths_tied(vectors[end - 1].length, vectors[end].length)) ++end;
    if (end - start > 1) {
      std::sort(vectors.begin() + static_cast<std::ptrdiff_t>(start),
                vectors.begin() + static_cast<std::ptrdiff_t>(end),
                [](const LatticeVector& a, const LatticeVector& b) { return a.coeff > b.coeff; });
    }
    start = end;
  }
}

ImageCoeff negate(const ImageCoeff& c) { return {-c[0], -c[1], -c[2]}; }

bool same_or_opposite(const ImageCoeff& a, const ImageCoeff& b) { return a == b || a == negate(b); }

bool collinear(const Vec3& a, const Vec3& b) {
  return a.normalized().cross(b.normalized()).norm() <= kCollinearTol;
}

bool coplanar(const Vec3& a, const Vec3& b, const Vec3& c) {
  return std::abs(a.normalized().dot(b.normalized().cross(c.normalized()))) <= kCoplanarTol;
}

}  // namespace

std::vector<LatticeVector> lattice_vectors_within(const Lattice& lattice, double radius) {
  std::vector<LatticeVector> out;
  if (!(radius > 0.0)) return out;
  const auto bounds = lattice.coefficient_bounds(radius);
  const Mat3& rows = lattice.matrix();
  for (int k1 = -bounds[0]; k1 <= bounds[0]; ++k1) {
    for (int k2 = -bounds[1]; k2 <= bounds[1]; ++k2) {
      const Vec3 partial = k1 * rows.row(0).transpose() + k2 * rows.row(1).transpose();
      for (int k3 = -bounds[2]; k3 <= bounds[2]; ++k3) {
        if (k1 == 0 && k2 == 0 && k3 == 0) continue;
        const Vec3 v = partial + k3 * rows.row(2).transpose();
        const double len = v.norm();
        if (len <= radius) out.push_back({v, {k1, k2, k3}, len});
      }
    }
  }
  canonical_sort(out);
  return out;
}

std::vector<LatticeVector> enumerate_lattice_vectors(const Lattice& lattice, int count) {
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "count must be >= 1");
  const Mat3& rows = lattice.matrix();
  double radius = std::min({rows.row(0).norm(), rows.row(1).norm(), rows.row(2).norm()});
  for (;;) {
    auto vectors = lattice_vectors_within(lattice, radius);
    const auto need = static_cast<std::size_t>(count);
    if (vectors.size() >= need && vectors[need - 1].length * (1.0 + 2.0 * kLengthTieTol) < radius) {
      vectors.resize(need);
      return vectors;
    }
    radius *= 1.5;
  }
}

Mat3 LatticeRepresentation::basis() const {
  Mat3 b;
  for (int m = 0; m < 3; ++m) b.row(m) = e[static_cast<std::size_t>(m)].transpose();
  return b;
}

LatticeRepresentation build_lattice_representation(const Lattice& lattice) {
  const Mat3& rows = lattice.matrix();
  // Three independent rows of length <= max row length always exist, so the
  // greedy choices below are found within that radius.
  double radius = std::max({rows.row(0).norm(), rows.row(1).norm(), rows.row(2).norm()}) *
                  (1.0 + 4.0 * kLengthTieTol);

  LatticeRepresentation rep;
  std::ostringstream diag;
  for (int attempt = 0; attempt < 8; ++attempt, radius *= 2.0) {
    const auto vectors = lattice_vectors_within(lattice, radius);
    if (vectors.empty()) continue;

    const LatticeVector& first = vectors.front();

    const LatticeVector* second = nullptr;
    for (const auto& v : vectors) {
      if (!collinear(first.vector, v.vector)) {
        second = &v;
        break;
      }
    }
    if (second == nullptr) continue;

    const LatticeVector* third = nullptr;
    for (const auto& v : vectors) {
      if (!coplanar(first.vector, second->vector, v.vector)) {
        third = &v;
        break;
      }
    }
    if (third == nullptr) continue;

    // Tie diagnostics: another eligible direction of the same length means
    // the pick came from the coefficient tie-break.
    bool degenerate = false;
    for (const auto& v : vectors) {
      if (v.length > third->length * (1.0 + 2.0 * kLengthTieTol)) break;
      if (lengths_tied(v.length, first.length) && !same_or_opposite(v.coeff, first.coeff)) {
        degenerate = true;
        diag << "e1 tie with " << v.coeff[0] << ' ' << v.coeff[1] << ' ' << v.coeff[2] << "; ";
      }
      if (!collinear(first.vector, v.vector) && lengths_tied(v.length, second->length) &&
          !same_or_opposite(v.coeff, second->coeff)) {
        degenerate = true;
        diag << "e2 tie with " << v.coeff[0] << ' ' << v.coeff[1] << ' ' << v.coeff[2] << "; ";
      }
      if (!coplanar(first.vector, second->vector, v.vector) && lengths_tied(v.length, third->length) &&
          !same_or_opposite(v.coeff, third->coeff)) {
        degenerate = true;
        diag << "e3 tie with " << v.coeff[0] << ' ' << v.coeff[1] << ' ' << v.coeff[2] << "; ";
      }
    }

    rep.e = {first.vector, second->vector, third->vector};
    rep.coeff = {first.coeff, second->coeff, third->coeff};

    for (std::size_t m = 1; m < 3; ++m) {
      const double cosine = rep.e[m].normalized().dot(rep.e[0].normalized());
      if (std::abs(cosine) <= kLengthTieTol) {
        degenerate = true;
        diag << "e" << m + 1 << " at 90 degrees to e1; ";
      }
      // Strictly greater than 90 degrees flips; rounding noise around an
      // exact right angle must not.
      if (cosine < -kLengthTieTol) {
        rep.e[m] = -rep.e[m];
        rep.coeff[m] = negate(rep.coeff[m]);
      }
    }

    const double det = rep.basis().determinant();
    if (!(std::abs(det) > kMinCellVolume)) {
      throw Error(ErrorCode::kDegenerateLattice, "lattice representation has vanishing volume");
    }
    if (det < 0.0) {
      for (std::size_t m = 0; m < 3; ++m) {
        rep.e[m] = -rep.e[m];
        rep.coeff[m] = negate(rep.coeff[m]);
      }
    }
    rep.tie_degenerate = degenerate;
    rep.diagnostics = diag.str();
    return rep;
  }
  throw Error(ErrorCode::kDegenerateLattice, "could not find three independent lattice vectors");
}

}  // namespace comformer
