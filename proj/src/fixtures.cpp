#include "comformer/fixtures.hpp"

#include "comformer/error.hpp"
#include "comformer/lattice_repr.hpp"
#include "comformer/rng.hpp"
#include "comformer/symmetry.hpp"

#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <numbers>
#include <utility>

namespace comformer {
namespace {

constexpr std::array<std::pair<FixtureFamily, std::string_view>, 7> kFamilyNames{{
    {FixtureFamily::kCubic, "cubic"},
    {FixtureFamily::kOrthorhombic, "orthorhombic"},
    {FixtureFamily::kTriclinic, "triclinic"},
    {FixtureFamily::kChiralHelix, "chiral-helix"},
    {FixtureFamily::kTwoCluster, "two-cluster"},
    {FixtureFamily::kRocksalt, "rocksalt"},
    {FixtureFamily::kSupercell, "supercell"},
}};

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidSpec, what); }

int random_species(Rng& rng) { return static_cast<int>(rng.uniform_int(1, 83)); }

double volume_per_atom(Rng& rng) { return rng.uniform(10.0, 20.0); }

Mat3 scaled_to_volume(const Mat3& rows, double volume) {
  return rows * std::cbrt(volume / std::abs(rows.determinant()));
}

double condition_number(const Mat3& m) {
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(m.transpose() * m, Eigen::EigenvaluesOnly);
  const Vec3 ev = eig.eigenvalues();  // ascending squares of the singular values
  return std::sqrt(ev[2] / ev[0]);
}

bool far_enough(const Lattice& lattice, const std::vector<Vec3>& placed, const Vec3& p) {
  for (const auto& q : placed) {
    if (minimum_image(lattice, p - q).norm() < kMinSeparation) return false;
  }
  return true;
}

// Uniform random atoms with minimum-separation rejection.
std::vector<Vec3> random_positions(const Lattice& lattice, int n, Rng& rng) {
  std::vector<Vec3> placed;
  placed.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < 2000 && !ok; ++attempt) {
      const Vec3 p = lattice.frac_to_cart(Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
      if (far_enough(lattice, placed, p)) {
        placed.push_back(p);
        ok = true;
      }
    }
    if (!ok) invalid("could not place atoms with the minimum separation");
  }
  return placed;
}

std::vector<int> random_species_list(int n, Rng& rng) {
  std::vector<int> z(static_cast<std::size_t>(n));
  for (auto& v : z) v = random_species(rng);
  return z;
}

Mat3 random_triclinic_rows(Rng& rng) {
  for (;;) {
    Mat3 skew = Mat3::Identity();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        if (r != c) skew(r, c) = rng.uniform(-0.35, 0.35);
      }
    }
    const Vec3 lengths(1.0, rng.uniform(1.05, 1.6), rng.uniform(1.05, 1.9));
    const Mat3 rows = skew * lengths.asDiagonal();
    if (std::abs(rows.determinant()) < 1e-3 || condition_number(rows) > kMaxConditionNumber) continue;
    const LatticeRepresentation rep = build_lattice_representation(Lattice(rows));
    if (rep.tie_degenerate) continue;
    return rows;
  }
}

Crystal cubic(const FixtureSpec& spec, Rng& rng) {
  if (spec.n_atoms == 1) {
    // Simple-cubic polonium.
    return Crystal(Lattice(Mat3::Identity() * 3.35), {Vec3::Zero()}, {84});
  }
  const double a = std::cbrt(spec.n_atoms * volume_per_atom(rng));
  const Lattice lattice(Mat3::Identity() * a);
  auto positions = random_positions(lattice, spec.n_atoms, rng);
  return Crystal(lattice, std::move(positions), random_species_list(spec.n_atoms, rng));
}

Crystal orthorhombic(const FixtureSpec& spec, Rng& rng) {
  const double b = 1.0 + rng.uniform(0.1, 0.4);
  const double c = b + rng.uniform(0.1, 0.4);
  const Mat3 rows = scaled_to_volume(Vec3(1.0, b, c).asDiagonal().toDenseMatrix(), spec.n_atoms * volume_per_atom(rng));
  const Lattice lattice(rows);
  auto positions = random_positions(lattice, spec.n_atoms, rng);
  return Crystal(lattice, std::move(positions), random_species_list(spec.n_atoms, rng));
}

Crystal triclinic(const FixtureSpec& spec, Rng& rng) {
  const Mat3 rows = scaled_to_volume(random_triclinic_rows(rng), spec.n_atoms * volume_per_atom(rng));
  const Lattice lattice(rows);
  auto positions = random_positions(lattice, spec.n_atoms, rng);
  return Crystal(lattice, std::move(positions), random_species_list(spec.n_atoms, rng));
}

Crystal chiral_helix(Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Mat3 rows = scaled_to_volume(random_triclinic_rows(rng), 4 * rng.uniform(14.0, 20.0));
    const Lattice lattice(rows);
    const Vec3 center = lattice.frac_to_cart(Vec3(0.5, 0.5, 0.5));
    const double radius = 0.9;
    const double rise = 0.75;
    const double turn = std::numbers::pi / 2;
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    std::vector<Vec3> positions;
    bool ok = true;
    for (int i = 0; i < 4 && ok; ++i) {
      const double t = phase + turn * i;
      const Vec3 p = center + Vec3(radius * std::cos(t), radius * std::sin(t), rise * (i - 1.5));
      ok = far_enough(lattice, positions, p);
      positions.push_back(p);
    }
    if (!ok) continue;
    Crystal crystal = wrap_to_cell(Crystal(lattice, std::move(positions), {6, 7, 8, 16}));
    if (is_superimposable(crystal, mirror(crystal, Vec3::UnitZ()), 1e-4)) continue;
    return crystal;
  }
  invalid("no chiral helix found");
}

Crystal two_cluster() {
  const Lattice lattice(Vec3(6.0, 10.0, 11.0).asDiagonal().toDenseMatrix());
  std::vector<Vec3> positions;
  std::vector<int> species;
  for (int group = 0; group < 2; ++group) {
    const Vec3 center(0.5 + 3.0 * group, 5.0, 5.5);
    for (int i = 0; i < 3; ++i) {
      const double t = 2.0 * std::numbers::pi * i / 3.0 + 0.3 * group;
      positions.push_back(center + Vec3(0.0, 0.6 * std::cos(t), 0.6 * std::sin(t)));
      species.push_back(group == 0 ? 11 : 17);
    }
  }
  return Crystal(lattice, std::move(positions), std::move(species));
}

Crystal rocksalt() {
  const double a = 5.64;
  Mat3 rows;
  rows << 0.0, a / 2, a / 2, a / 2, 0.0, a / 2, a / 2, a / 2, 0.0;
  const Lattice lattice(rows);
  return Crystal(lattice, {Vec3::Zero(), lattice.frac_to_cart(Vec3(0.5, 0.5, 0.5))}, {11, 17});
}

Crystal apply_jitter(const Crystal& crystal, double jitter, Rng& rng) {
  if (jitter == 0.0) return crystal;
  std::vector<Vec3> positions;
  positions.reserve(crystal.size());
  for (const auto& p : crystal.positions()) positions.push_back(p + jitter * Vec3(rng.normal(), rng.normal(), rng.normal()));
  return wrap_to_cell(Crystal(crystal.lattice(), std::move(positions), crystal.species()));
}

}  // namespace

std::string_view fixture_family_name(FixtureFamily family) {
  for (const auto& [f, name] : kFamilyNames) {
    if (f == family) return name;
  }
  return "unknown";
}

std::optional<FixtureFamily> fixture_family_from_name(std::string_view name) {
  for (const auto& [f, n] : kFamilyNames) {
    if (n == name) return f;
  }
  if (name == "triclinic-random") return FixtureFamily::kTriclinic;
  return std::nullopt;
}

Crystal make_supercell(const Crystal& crystal, int factor) {
  if (factor < 1 || factor > 64) invalid("supercell factor must be in 1..64");
  const Lattice& lattice = crystal.lattice();
  std::vector<Vec3> positions;
  std::vector<int> species;
  const auto count = crystal.size() * static_cast<std::size_t>(factor * factor * factor);
  positions.reserve(count);
  species.reserve(count);
  for (int i = 0; i < factor; ++i) {
    for (int j = 0; j < factor; ++j) {
      for (int k = 0; k < factor; ++k) {
        const Vec3 shift = lattice.image_vector({i, j, k});
        for (std::size_t a = 0; a < crystal.size(); ++a) {
          positions.push_back(crystal.positions()[a] + shift);
          species.push_back(crystal.species()[a]);
        }
      }
    }
  }
  return Crystal(Lattice(lattice.matrix() * static_cast<double>(factor)), std::move(positions), std::move(species));
}

Crystal generate(const FixtureSpec& spec) {
  const bool random_family = spec.family == FixtureFamily::kCubic || spec.family == FixtureFamily::kOrthorhombic ||
                             spec.family == FixtureFamily::kTriclinic;
  if (random_family && (spec.n_atoms < 1 || spec.n_atoms > 100000)) invalid("n_atoms must be in 1..100000");
  if (!(spec.jitter >= 0.0) || !std::isfinite(spec.jitter)) invalid("jitter must be finite and >= 0");
  Rng rng(spec.seed);
  Crystal crystal = [&] {
    switch (spec.family) {
      case FixtureFamily::kCubic:
        return cubic(spec, rng);
      case FixtureFamily::kOrthorhombic:
        return orthorhombic(spec, rng);
      case FixtureFamily::kTriclinic:
        return triclinic(spec, rng);
      case FixtureFamily::kChiralHelix:
        return chiral_helix(rng);
      case FixtureFamily::kTwoCluster:
        return two_cluster();
      case FixtureFamily::kRocksalt:
        return rocksalt();
      case FixtureFamily::kSupercell: {
        if (spec.base == FixtureFamily::kSupercell) invalid("supercell base cannot be a supercell");
        FixtureSpec base = spec;
        base.family = spec.base;
        base.jitter = 0.0;
        return make_supercell(generate(base), spec.factor);
      }
    }
    invalid("unknown family");
  }();
  return apply_jitter(crystal, spec.jitter, rng);
}

}  // namespace comformer
