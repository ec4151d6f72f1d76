#pragma once

#include "comformer/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace comformer {

class Rng;

using IntMat3 = Eigen::Matrix3i;

enum class TransformKind { kIsometry, kOriginShift, kUnimodular, kMirror };

std::string_view transform_kind_name(TransformKind kind);

struct TransformSpec {
  TransformKind kind = TransformKind::kIsometry;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  Vec3 shift = Vec3::Zero();  // fractional
  IntMat3 unimodular = IntMat3::Identity();
  Vec3 normal = Vec3::UnitZ();
};

/// (A, R P + b, R L). Errors: ImproperRotation.
Crystal apply_isometry(const Crystal& crystal, const Mat3& rotation, const Vec3& translation);

/// Adds t . L to every position and wraps back into the cell.
Crystal shift_origin(const Crystal& crystal, const Vec3& t_frac);

/// L' = U L with positions rewrapped into the new cell. Errors: NonUnimodular.
Crystal apply_unimodular(const Crystal& crystal, const IntMat3& u);

/// Householder reflection of positions and lattice through the plane with
/// the given normal (normalized here). Errors: ZeroVector.
Crystal mirror(const Crystal& crystal, const Vec3& normal);

Crystal apply_transform(const Crystal& crystal, const TransformSpec& spec);

/// Product of elementary shears and paired swap/negate steps; entries stay in [-2, 2].
IntMat3 random_unimodular(Rng& rng);

TransformSpec random_transform(TransformKind kind, Rng& rng);

struct FuzzOptions {
  double tol = 1e-9;
  /// Adds reflections to the pool. They are not passive symmetries, so this
  /// is a negative control.
  bool include_mirror = false;
};

struct FuzzKindStats {
  TransformKind kind = TransformKind::kIsometry;
  int passed = 0;
  int failed = 0;
  double worst_deviation = 0.0;
};

struct FuzzReport {
  int passed = 0;
  int failed = 0;
  /// +inf when some transformed graph could not be matched at all.
  double worst_deviation = 0.0;
  std::vector<FuzzKindStats> per_kind;
  std::vector<std::string> failures;  // first few failure reasons
};

/// `trials` random transforms of each kind in the pool; each transformed
/// crystal's invariant graph is compared with the original's at opts.tol.
/// Errors: InvalidArgument when trials < 1.
FuzzReport fuzz_invariance(const Crystal& crystal, int k, int trials, std::uint64_t seed, FuzzOptions opts = {});

/// Brute-force check for a proper rotation R and translation t with
/// R A + t == B modulo B's lattice (species respected, atoms may permute).
/// Independent of graph construction.
bool is_superimposable(const Crystal& a, const Crystal& b, double tol = 1e-6);

}  // namespace comformer
