#include "comformer/symmetry.hpp"

#include "comformer/error.hpp"
#include "comformer/graph.hpp"
#include "comformer/lattice_repr.hpp"
#include "comformer/parallel.hpp"
#include "comformer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

namespace comformer {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Mat3 to_double(const IntMat3& u) { return u.cast<double>(); }

}  // namespace

std::string_view transform_kind_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::kIsometry:
      return "isometry";
    case TransformKind::kOriginShift:
      return "origin_shift";
    case TransformKind::kUnimodular:
      return "unimodular";
    case TransformKind::kMirror:
      return "mirror";
  }
  return "unknown";
}

Crystal apply_isometry(const Crystal& crystal, const Mat3& rotation, const Vec3& translation) {
  if (!is_proper_rotation(rotation)) throw Error(ErrorCode::kImproperRotation, "rotation is not proper orthogonal");
  const Mat3 rows = crystal.lattice().matrix() * rotation.transpose();
  std::vector<Vec3> positions;
  positions.reserve(crystal.size());
  for (const auto& p : crystal.positions()) positions.push_back(rotation * p + translation);
  return Crystal(Lattice(rows), std::move(positions), crystal.species());
}

Crystal shift_origin(const Crystal& crystal, const Vec3& t_frac) {
  const Vec3 offset = crystal.lattice().frac_to_cart(t_frac);
  std::vector<Vec3> positions;
  positions.reserve(crystal.size());
  for (const auto& p : crystal.positions()) positions.push_back(p + offset);
  return wrap_to_cell(Crystal(crystal.lattice(), std::move(positions), crystal.species()));
}

Crystal apply_unimodular(const Crystal& crystal, const IntMat3& u) {
  // Integer determinant by cofactor expansion; no rounding involved.
  const long long det = static_cast<long long>(u(0, 0)) * (static_cast<long long>(u(1, 1)) * u(2, 2) - static_cast<long long>(u(1, 2)) * u(2, 1)) -
                        static_cast<long long>(u(0, 1)) * (static_cast<long long>(u(1, 0)) * u(2, 2) - static_cast<long long>(u(1, 2)) * u(2, 0)) +
                        static_cast<long long>(u(0, 2)) * (static_cast<long long>(u(1, 0)) * u(2, 1) - static_cast<long long>(u(1, 1)) * u(2, 0));
  if (det != 1) {
    throw Error(ErrorCode::kNonUnimodular, "det U = " + std::to_string(det) + ", expected +1");
  }
  const Lattice lattice(to_double(u) * crystal.lattice().matrix());
  return wrap_to_cell(Crystal(lattice, crystal.positions(), crystal.species()));
}

Crystal mirror(const Crystal& crystal, const Vec3& normal) {
  const double norm = normal.norm();
  if (!(norm > 1e-12)) throw Error(ErrorCode::kZeroVector, "mirror normal is zero");
  const Vec3 nhat = normal / norm;
  const Mat3 reflect = Mat3::Identity() - 2.0 * nhat * nhat.transpose();
  const Mat3 rows = crystal.lattice().matrix() * reflect.transpose();
  std::vector<Vec3> positions;
  positions.reserve(crystal.size());
  for (const auto& p : crystal.positions()) positions.push_back(reflect * p);
  return Crystal(Lattice(rows), std::move(positions), crystal.species());
}

Crystal apply_transform(const Crystal& crystal, const TransformSpec& spec) {
  switch (spec.kind) {
    case TransformKind::kIsometry:
      return apply_isometry(crystal, spec.rotation, spec.translation);
    case TransformKind::kOriginShift:
      return shift_origin(crystal, spec.shift);
    case TransformKind::kUnimodular:
      return apply_unimodular(crystal, spec.unimodular);
    case TransformKind::kMirror:
      return mirror(crystal, spec.normal);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown transform kind");
}

IntMat3 random_unimodular(Rng& rng) {
  IntMat3 u = IntMat3::Identity();
  const auto steps = rng.uniform_int(2, 6);
  for (std::int64_t s = 0; s < steps; ++s) {
    for (int attempt = 0; attempt < 16; ++attempt) {
      IntMat3 next = u;
      const auto a = static_cast<int>(rng.uniform_int(0, 2));
      const auto b = static_cast<int>((a + rng.uniform_int(1, 2)) % 3);
      if (rng.uniform() < 0.75) {
        // Shear: row a += sign * row b.
        const int sign = rng.uniform() < 0.5 ? -1 : 1;
        next.row(a) += sign * u.row(b);
      } else {
        // A swap flips the determinant; negating one row flips it back.
        next.row(a) = u.row(b);
        next.row(b) = -u.row(a);
      }
      if (next.cwiseAbs().maxCoeff() <= 2) {
        u = next;
        break;
      }
    }
  }
  return u;
}

TransformSpec random_transform(TransformKind kind, Rng& rng) {
  TransformSpec spec;
  spec.kind = kind;
  switch (kind) {
    case TransformKind::kIsometry:
      spec.rotation = random_rotation(rng);
      for (int a = 0; a < 3; ++a) spec.translation[a] = rng.uniform(-10.0, 10.0);
      break;
    case TransformKind::kOriginShift:
      for (int a = 0; a < 3; ++a) spec.shift[a] = rng.uniform();
      break;
    case TransformKind::kUnimodular:
      spec.unimodular = random_unimodular(rng);
      break;
    case TransformKind::kMirror:
      spec.normal = Vec3(rng.normal(), rng.normal(), rng.normal());
      if (spec.normal.norm() < 1e-6) spec.normal = Vec3::UnitZ();
      spec.normal.normalize();
      break;
  }
  return spec;
}

FuzzReport fuzz_invariance(const Crystal& crystal, int k, int trials, std::uint64_t seed, FuzzOptions opts) {
  if (trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  std::vector<TransformKind> pool{TransformKind::kIsometry, TransformKind::kOriginShift, TransformKind::kUnimodular};
  if (opts.include_mirror) pool.push_back(TransformKind::kMirror);

  const CrystalGraph reference = build_invariant_graph(crystal, k);
  const auto per_kind_trials = static_cast<std::size_t>(trials);
  std::vector<GraphComparison> outcomes(pool.size() * per_kind_trials);

  parallel_for(outcomes.size(), [&](std::size_t job) {
    const std::size_t kind_index = job / per_kind_trials;
    const std::size_t trial = job % per_kind_trials;
    Rng rng(splitmix64(seed ^ splitmix64(kind_index * 1000003ULL + trial)));
    const TransformSpec spec = random_transform(pool[kind_index], rng);
    GraphComparison& out = outcomes[job];
    try {
      const CrystalGraph graph = build_invariant_graph(apply_transform(crystal, spec), k);
      out = compare_graph_features(reference, graph, opts.tol);
    } catch (const Error& e) {
      out.equal = false;
      out.max_deviation = std::numeric_limits<double>::infinity();
      out.reason = e.what();
    }
  });

  FuzzReport report;
  for (std::size_t kind_index = 0; kind_index < pool.size(); ++kind_index) {
    FuzzKindStats stats;
    stats.kind = pool[kind_index];
    for (std::size_t trial = 0; trial < per_kind_trials; ++trial) {
      const GraphComparison& out = outcomes[kind_index * per_kind_trials + trial];
      stats.worst_deviation = std::max(stats.worst_deviation, out.max_deviation);
      if (out.equal) {
        ++stats.passed;
      } else {
        ++stats.failed;
        if (report.failures.size() < 10) {
          report.failures.push_back(std::string(transform_kind_name(stats.kind)) + " trial " +
                                    std::to_string(trial) + ": " + out.reason);
        }
      }
    }
    report.passed += stats.passed;
    report.failed += stats.failed;
    report.worst_deviation = std::max(report.worst_deviation, stats.worst_deviation);
    report.per_kind.push_back(stats);
  }
  return report;
}

bool is_superimposable(const Crystal& a, const Crystal& b, double tol) {
  if (a.size() != b.size()) return false;
  {
    auto sa = a.species();
    auto sb = b.species();
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa != sb) return false;
  }
  if (std::abs(a.lattice().volume() - b.lattice().volume()) > 1e-6 * a.lattice().volume()) return false;

  // A reduced basis of A; candidate images in B are triples of B-lattice
  // vectors with the same Gram matrix and handedness.
  const auto rep = build_lattice_representation(a.lattice());
  const Mat3 ea = rep.basis();
  const Mat3 gram = ea * ea.transpose();
  const double scale = std::sqrt(gram.diagonal().maxCoeff());
  const double gram_tol = 1e-6 * scale * scale + 2.0 * tol * scale;
  const auto candidates = lattice_vectors_within(b.lattice(), scale * (1.0 + 1e-6) + tol);

  std::array<std::vector<Vec3>, 3> by_slot;
  for (const auto& v : candidates) {
    for (int m = 0; m < 3; ++m) {
      if (std::abs(v.vector.squaredNorm() - gram(m, m)) <= gram_tol) by_slot[static_cast<std::size_t>(m)].push_back(v.vector);
    }
  }
  const Mat3 ea_inv_t = ea.transpose().inverse();

  for (const auto& v1 : by_slot[0]) {
    for (const auto& v2 : by_slot[1]) {
      if (std::abs(v1.dot(v2) - gram(0, 1)) > gram_tol) continue;
      for (const auto& v3 : by_slot[2]) {
        if (std::abs(v1.dot(v3) - gram(0, 2)) > gram_tol || std::abs(v2.dot(v3) - gram(1, 2)) > gram_tol) continue;
        Mat3 vb;
        vb.row(0) = v1.transpose();
        vb.row(1) = v2.transpose();
        vb.row(2) = v3.transpose();
        if (vb.determinant() * ea.determinant() <= 0.0) continue;
        // R e_m = v_m for all m.
        const Mat3 r = vb.transpose() * ea_inv_t;
        if (!is_proper_rotation(r, 1e-6)) continue;
        for (std::size_t j = 0; j < b.size(); ++j) {
          if (b.species()[j] != a.species()[0]) continue;
          const Vec3 t = b.positions()[j] - r * a.positions()[0];
          bool all = true;
          for (std::size_t i = 0; i < a.size() && all; ++i) {
            const Vec3 moved = r * a.positions()[i] + t;
            bool hit = false;
            for (std::size_t q = 0; q < b.size() && !hit; ++q) {
              if (b.species()[q] != a.species()[i]) continue;
              hit = minimum_image(b.lattice(), moved - b.positions()[q]).norm() <= tol;
            }
            all = hit;
          }
          if (all) return true;
        }
      }
    }
  }
  return false;
}

}  // namespace comformer
