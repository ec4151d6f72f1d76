#include "comformer/geometry.hpp"

#include "comformer/error.hpp"
#include "comformer/rng.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace comformer {

Lattice::Lattice(const Mat3& rows) : rows_(rows) {
  if (!rows_.allFinite()) {
    throw Error(ErrorCode::kSingularLattice, "lattice contains non-finite entries");
  }
  det_ = rows_.determinant();
  if (!(std::abs(det_) > kMinCellVolume)) {
    std::ostringstream msg;
    msg << "|det L| = " << std::abs(det_) << " A^3 is below " << kMinCellVolume;
    throw Error(ErrorCode::kSingularLattice, msg.str());
  }
  inv_t_ = rows_.transpose().inverse();
  // Row i of (L^T)^-1 is the reciprocal vector b_i with b_i . l_j = delta_ij;
  // plane spacing along axis i is 1/|b_i|.
  for (int i = 0; i < 3; ++i) {
    spacing_[static_cast<std::size_t>(i)] = 1.0 / inv_t_.row(i).norm();
  }
}

Vec3 Lattice::image_vector(const ImageCoeff& k) const {
  return static_cast<double>(k[0]) * rows_.row(0).transpose() +
         static_cast<double>(k[1]) * rows_.row(1).transpose() +
         static_cast<double>(k[2]) * rows_.row(2).transpose();
}

std::array<int, 3> Lattice::coefficient_bounds(double radius) const {
  std::array<int, 3> bounds{};
  for (std::size_t i = 0; i < 3; ++i) {
    bounds[i] = static_cast<int>(std::floor(radius / spacing_[i] + 1e-9));
  }
  return bounds;
}

Crystal::Crystal(Lattice lattice, std::vector<Vec3> positions, std::vector<int> species)
    : lattice_(std::move(lattice)), positions_(std::move(positions)), species_(std::move(species)) {
  if (positions_.empty()) {
    throw Error(ErrorCode::kInvalidCrystal, "crystal must contain at least one atom");
  }
  if (positions_.size() != species_.size()) {
    throw Error(ErrorCode::kInvalidCrystal, "positions and species have different lengths");
  }
  for (const auto& p : positions_) {
    if (!p.allFinite()) throw Error(ErrorCode::kInvalidCrystal, "non-finite atom position");
  }
  for (int z : species_) {
    if (z < 1 || z > 118) {
      throw Error(ErrorCode::kInvalidCrystal, "atomic number " + std::to_string(z) + " outside 1..118");
    }
  }
}

Vec3 frac_to_cart(const Lattice& lattice, const Vec3& frac) { return lattice.frac_to_cart(frac); }

Vec3 cart_to_frac(const Lattice& lattice, const Vec3& cart) { return lattice.cart_to_frac(cart); }

double wrap_unit(double f) {
  double w = f - std::floor(f);
  // f = -1e-18 gives 1.0 after subtraction.
  if (w >= 1.0) w = 0.0;
  return w;
}

Crystal wrap_to_cell(const Crystal& crystal) {
  const Lattice& lattice = crystal.lattice();
  std::vector<Vec3> wrapped;
  wrapped.reserve(crystal.size());
  for (const auto& p : crystal.positions()) {
    Vec3 f = lattice.cart_to_frac(p);
    bool inside = true;
    for (int a = 0; a < 3; ++a) inside = inside && f[a] >= 0.0 && f[a] < 1.0;
    if (inside) {
      wrapped.push_back(p);
      continue;
    }
    for (int a = 0; a < 3; ++a) f[a] = wrap_unit(f[a]);
    wrapped.push_back(lattice.frac_to_cart(f));
  }
  return Crystal(lattice, std::move(wrapped), crystal.species());
}

Vec3 minimum_image(const Lattice& lattice, const Vec3& delta) {
  Vec3 frac = lattice.cart_to_frac(delta);
  for (int a = 0; a < 3; ++a) frac[a] -= std::round(frac[a]);
  const Vec3 base = lattice.frac_to_cart(frac);
  Vec3 best = base;
  double best_norm = base.squaredNorm();
  auto consider = [&](const Vec3& candidate) {
    const double norm = candidate.squaredNorm();
    if (norm < best_norm) {
      best_norm = norm;
      best = candidate;
    }
  };
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      for (int k = -1; k <= 1; ++k) consider(base + lattice.image_vector({i, j, k}));
    }
  }
  // Any shorter representative has |frac_a| <= r |column a of L^-1|; on skewed
  // cells that box can reach past the 27 neighbors.
  const Mat3 inv = lattice.matrix().inverse();
  const double r = std::sqrt(best_norm);
  std::array<int, 3> lo{};
  std::array<int, 3> hi{};
  bool wide = false;
  for (int a = 0; a < 3; ++a) {
    const double reach = r * inv.col(a).norm();
    lo[a] = static_cast<int>(std::ceil(-frac[a] - reach));
    hi[a] = static_cast<int>(std::floor(-frac[a] + reach));
    wide = wide || lo[a] < -1 || hi[a] > 1;
  }
  if (wide) {
    for (int i = lo[0]; i <= hi[0]; ++i) {
      for (int j = lo[1]; j <= hi[1]; ++j) {
        for (int k = lo[2]; k <= hi[2]; ++k) consider(base + lattice.image_vector({i, j, k}));
      }
    }
  }
  return best;
}

double angle_between(const Vec3& a, const Vec3& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 1e-12) || !(nb > 1e-12)) {
    throw Error(ErrorCode::kZeroVector, "angle_between requires nonzero vectors");
  }
  // atan2 of (|a x b|, a . b) keeps full precision near 0 and pi where acos
  // of a clamped cosine loses half the significant digits.
  const double s = a.cross(b).norm();
  const double c = a.dot(b);
  return std::atan2(s, c);
}

KabschResult kabsch_align(std::span<const Vec3> x, std::span<const Vec3> y) {
  if (x.size() != y.size() || x.empty()) {
    throw Error(ErrorCode::kLengthMismatch, "kabsch_align needs equally sized, non-empty point sets");
  }
  const double count = static_cast<double>(x.size());
  Vec3 cx = Vec3::Zero();
  Vec3 cy = Vec3::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    cx += x[i];
    cy += y[i];
  }
  cx /= count;
  cy /= count;

  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    h += (x[i] - cx) * (y[i] - cy).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;

  KabschResult result;
  result.rotation = v * d * u.transpose();
  result.translation = cy - result.rotation * cx;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum_sq += (result.rotation * x[i] + result.translation - y[i]).squaredNorm();
  }
  result.rmsd = std::sqrt(sum_sq / count);
  return result;
}

Mat3 random_rotation(Rng& rng) {
  Eigen::Quaterniond q;
  double norm = 0.0;
  do {
    q = Eigen::Quaterniond(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    norm = q.norm();
  } while (norm < 1e-6);
  q.normalize();
  return q.toRotationMatrix();
}

Mat3 random_rotation(std::uint64_t seed) {
  Rng rng(seed);
  return random_rotation(rng);
}

bool is_proper_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

}  // namespace comformer
