#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace comformer {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Integer lattice coefficients (k1, k2, k3) of a periodic image.
using ImageCoeff = std::array<int, 3>;

inline constexpr double kMinCellVolume = 1e-10;

/// Periodic lattice; row i of the matrix is the translation vector l_i (Angstrom).
class Lattice {
 public:
  /// Throws SingularLattice when |det| <= 1e-10 or any entry is non-finite.
  explicit Lattice(const Mat3& rows);

  [[nodiscard]] const Mat3& matrix() const noexcept { return rows_; }
  [[nodiscard]] Vec3 row(int i) const { return rows_.row(i).transpose(); }
  [[nodiscard]] double det() const noexcept { return det_; }
  [[nodiscard]] double volume() const noexcept { return std::abs(det_); }

  [[nodiscard]] Vec3 frac_to_cart(const Vec3& frac) const { return rows_.transpose() * frac; }
  [[nodiscard]] Vec3 cart_to_frac(const Vec3& cart) const { return inv_t_ * cart; }
  [[nodiscard]] Vec3 image_vector(const ImageCoeff& k) const;

  /// Distance between adjacent lattice planes of constant fractional coordinate `axis`.
  [[nodiscard]] double plane_spacing(int axis) const noexcept { return spacing_[static_cast<std::size_t>(axis)]; }

  /// Per-axis coefficient bound: every lattice vector of length <= radius has |k_axis| <= bound.
  [[nodiscard]] std::array<int, 3> coefficient_bounds(double radius) const;

 private:
  Mat3 rows_;
  Mat3 inv_t_;  // (L^T)^-1: cart -> frac
  double det_ = 0.0;
  std::array<double, 3> spacing_{};
};

/// Unit cell M = (A, P, L): Cartesian positions, atomic numbers, lattice.
class Crystal {
 public:
  /// Throws InvalidCrystal on length mismatch, n == 0, non-finite positions or
  /// atomic numbers outside 1..118.
  Crystal(Lattice lattice, std::vector<Vec3> positions, std::vector<int> species);

  [[nodiscard]] const Lattice& lattice() const noexcept { return lattice_; }
  [[nodiscard]] const std::vector<Vec3>& positions() const noexcept { return positions_; }
  [[nodiscard]] const std::vector<int>& species() const noexcept { return species_; }
  [[nodiscard]] std::size_t size() const noexcept { return positions_.size(); }

 private:
  Lattice lattice_;
  std::vector<Vec3> positions_;
  std::vector<int> species_;
};

Vec3 frac_to_cart(const Lattice& lattice, const Vec3& frac);
Vec3 cart_to_frac(const Lattice& lattice, const Vec3& cart);

/// Moves every atom by an integer lattice combination so its fractional
/// coordinates lie in [0, 1).
Crystal wrap_to_cell(const Crystal& crystal);

/// Wraps a single fractional coordinate into [0, 1).
double wrap_unit(double f);

/// Shortest representative of delta modulo the lattice. Rounds fractional
/// coordinates, then searches every image inside the dual-norm bound.
Vec3 minimum_image(const Lattice& lattice, const Vec3& delta);

/// Angle in [0, pi]. Throws ZeroVector when either norm is <= 1e-12.
double angle_between(const Vec3& a, const Vec3& b);

struct KabschResult {
  Mat3 rotation;
  Vec3 translation;
  double rmsd = 0.0;
};

/// Proper-rotation (det = +1) least-squares alignment of X onto Y:
/// minimizes sqrt(mean ||R x + t - y||^2). Throws LengthMismatch.
KabschResult kabsch_align(std::span<const Vec3> x, std::span<const Vec3> y);

class Rng;

/// Uniformly distributed proper rotation from a normalized Gaussian quaternion.
Mat3 random_rotation(std::uint64_t seed);
Mat3 random_rotation(Rng& rng);

/// True when R^T R = I and det R = +1 within tol.
bool is_proper_rotation(const Mat3& r, double tol = 1e-9);

}  // namespace comformer
