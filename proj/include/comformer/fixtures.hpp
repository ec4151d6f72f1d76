#pragma once

#include "comformer/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string_view>

namespace comformer {

enum class FixtureFamily { kCubic, kOrthorhombic, kTriclinic, kChiralHelix, kTwoCluster, kRocksalt, kSupercell };

std::string_view fixture_family_name(FixtureFamily family);
std::optional<FixtureFamily> fixture_family_from_name(std::string_view name);

inline constexpr double kMinSeparation = 0.5;
inline constexpr double kMaxConditionNumber = 20.0;

struct FixtureSpec {
  FixtureFamily family = FixtureFamily::kCubic;
  /// Atoms per cell for the random families. Cubic with 1 atom is simple-cubic Po.
  int n_atoms = 1;
  std::uint64_t seed = 0;
  /// Gaussian displacement (Angstrom) applied after generation.
  double jitter = 0.0;
  /// Supercell only: the base family and the repetition factor per axis.
  FixtureFamily base = FixtureFamily::kTriclinic;
  int factor = 2;
};

/// Deterministic per spec. Errors: InvalidSpec.
Crystal generate(const FixtureSpec& spec);

/// f x f x f repetition of the cell. Errors: InvalidSpec when f < 1.
Crystal make_supercell(const Crystal& crystal, int factor);

}  // namespace comformer
