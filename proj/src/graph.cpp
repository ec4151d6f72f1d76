#include "comformer/graph.hpp"

#include "comformer/error.hpp"
#include "comformer/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace comformer {
namespace {

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int positive_mod(int a, int b) {
  const int r = a % b;
  return r < 0 ? r + b : r;
}

/// Fractional-space cell list over the wrapped atoms.
class CellList {
 public:
  CellList(const Crystal& crystal, double bin_width) : crystal_(crystal) {
    const Lattice& lattice = crystal.lattice();
    const std::size_t n = crystal.size();
    for (int a = 0; a < 3; ++a) {
      const double h = lattice.plane_spacing(a);
      bins_[static_cast<std::size_t>(a)] = std::clamp(static_cast<int>(std::floor(h / bin_width)), 1, 1024);
    }
    // Keep the number of (mostly empty) bins proportional to n.
    while (static_cast<std::size_t>(bins_[0]) * bins_[1] * bins_[2] > 4 * n + 8) {
      const auto widest = static_cast<std::size_t>(std::max_element(bins_.begin(), bins_.end()) - bins_.begin());
      bins_[widest] = std::max(1, bins_[widest] / 2);
    }
    wrapped_.resize(n);
    shift_.resize(n);
    const std::size_t total = static_cast<std::size_t>(bins_[0]) * bins_[1] * bins_[2];
    members_.assign(total, {});
    for (std::size_t j = 0; j < n; ++j) {
      const Vec3 f = lattice.cart_to_frac(crystal.positions()[j]);
      std::array<int, 3> bin{};
      for (int a = 0; a < 3; ++a) {
        const double w = wrap_unit(f[a]);
        wrapped_[j][a] = w;
        shift_[j][static_cast<std::size_t>(a)] = static_cast<int>(std::llround(f[a] - w));
        const int nb = bins_[static_cast<std::size_t>(a)];
        bin[static_cast<std::size_t>(a)] = std::min(nb - 1, static_cast<int>(std::floor(w * nb)));
      }
      members_[index(bin)].push_back(static_cast<int>(j));
    }
  }

  /// Every (j, image) with |p_j + image.L - p_i| <= radius, excluding (i, 0).
  void collect(int i, double radius, std::vector<Neighbor>& out) const {
    out.clear();
    const Lattice& lattice = crystal_.lattice();
    const auto& positions = crystal_.positions();
    const Vec3& center = positions[static_cast<std::size_t>(i)];
    const Vec3& wi = wrapped_[static_cast<std::size_t>(i)];
    const ImageCoeff& si = shift_[static_cast<std::size_t>(i)];
    std::array<int, 3> lo{};
    std::array<int, 3> hi{};
    for (std::size_t a = 0; a < 3; ++a) {
      const double span = radius / lattice.plane_spacing(static_cast<int>(a)) + 1e-9;
      const int nb = bins_[a];
      lo[a] = static_cast<int>(std::floor((wi[static_cast<int>(a)] - span) * nb));
      hi[a] = static_cast<int>(std::floor((wi[static_cast<int>(a)] + span) * nb));
    }
    for (int b0 = lo[0]; b0 <= hi[0]; ++b0) {
      for (int b1 = lo[1]; b1 <= hi[1]; ++b1) {
        for (int b2 = lo[2]; b2 <= hi[2]; ++b2) {
          const std::array<int, 3> cell{positive_mod(b0, bins_[0]), positive_mod(b1, bins_[1]),
                                        positive_mod(b2, bins_[2])};
          const std::array<int, 3> offset{floor_div(b0, bins_[0]), floor_div(b1, bins_[1]),
                                          floor_div(b2, bins_[2])};
          for (int j : members_[index(cell)]) {
            const ImageCoeff& sj = shift_[static_cast<std::size_t>(j)];
            const ImageCoeff image{offset[0] - sj[0] + si[0], offset[1] - sj[1] + si[1],
                                   offset[2] - sj[2] + si[2]};
            if (j == i && image == ImageCoeff{0, 0, 0}) continue;
            const Vec3 vec = center - (positions[static_cast<std::size_t>(j)] + lattice.image_vector(image));
            const double dist = vec.norm();
            if (dist <= radius) out.push_back({j, image, dist, vec});
          }
        }
      }
    }
  }

 private:
  [[nodiscard]] std::size_t index(const std::array<int, 3>& b) const {
    return (static_cast<std::size_t>(b[0]) * static_cast<std::size_t>(bins_[1]) + static_cast<std::size_t>(b[1])) *
               static_cast<std::size_t>(bins_[2]) +
           static_cast<std::size_t>(b[2]);
  }

  const Crystal& crystal_;
  std::array<int, 3> bins_{1, 1, 1};
  std::vector<Vec3> wrapped_;
  std::vector<ImageCoeff> shift_;
  std::vector<std::vector<int>> members_;
};

bool edge_order(const Edge& a, const Edge& b) {
  if (a.dst != b.dst) return a.dst < b.dst;
  if (a.slot != b.slot) return a.slot < b.slot;
  if (a.dist != b.dist) return a.dist < b.dist;
  if (a.src != b.src) return a.src < b.src;
  return a.image < b.image;
}

using FeatureTuple = std::array<double, 5>;  // slot, dist, theta1..3

std::vector<std::vector<FeatureTuple>> features_by_node(const CrystalGraph& g) {
  std::vector<std::vector<FeatureTuple>> out(g.num_nodes());
  for (const auto& e : g.edges) {
    std::array<double, 3> angles{};
    if (e.angles) {
      angles = *e.angles;
    } else if (e.vec) {
      angles = edge_angles(*e.vec, g.lattice_repr);
    }
    out[static_cast<std::size_t>(e.dst)].push_back(
        {static_cast<double>(e.slot), e.dist, angles[0], angles[1], angles[2]});
  }
  for (auto& list : out) std::sort(list.begin(), list.end());
  return out;
}

}  // namespace

std::string_view graph_kind_name(GraphKind kind) {
  return kind == GraphKind::kInvariant ? "invariant" : "equivariant";
}

std::vector<NodeNeighborhood> periodic_knn(const Crystal& crystal, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidK, "k must be >= 1, got " + std::to_string(k));
  const std::size_t n = crystal.size();
  const double volume = crystal.lattice().volume();
  // Radius of a sphere holding about k atoms at the mean density.
  const double estimate =
      std::cbrt(3.0 * static_cast<double>(k) * volume / (4.0 * std::numbers::pi * static_cast<double>(n)));
  const CellList cells(crystal, std::max(estimate, 1e-3));

  std::vector<NodeNeighborhood> result(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<Neighbor> found;
    std::vector<double> dists;
    double radius = 1.25 * estimate + kRadiusTieSlack;
    for (;;) {
      cells.collect(static_cast<int>(i), radius, found);
      if (found.size() >= static_cast<std::size_t>(k)) {
        dists.resize(found.size());
        std::transform(found.begin(), found.end(), dists.begin(), [](const Neighbor& nb) { return nb.dist; });
        std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
        const double kth = dists[static_cast<std::size_t>(k - 1)];
        if (kth + kRadiusTieSlack <= radius) {
          NodeNeighborhood& hood = result[i];
          hood.radius = kth;
          for (const auto& nb : found) {
            if (nb.dist <= kth + kRadiusTieSlack) hood.neighbors.push_back(nb);
          }
          return;
        }
        radius = kth + 2.0 * kRadiusTieSlack;
        continue;
      }
      radius *= 1.5;
    }
  }, n >= 64 ? worker_count() : 1);
  return result;
}

std::array<double, 3> edge_angles(const Vec3& vec, const LatticeRepresentation& repr) {
  return {angle_between(vec, repr.e[0]), angle_between(vec, repr.e[1]), angle_between(vec, repr.e[2])};
}

CrystalGraph build_graph(const Crystal& crystal, int k, GraphKind kind, BuildOptions options) {
  const auto neighborhoods = periodic_knn(crystal, k);
  CrystalGraph graph;
  graph.kind = kind;
  graph.k = k;
  graph.atomic_numbers = crystal.species();
  graph.lattice_repr = build_lattice_representation(crystal.lattice());

  const auto attach = [&](Edge& edge, const Vec3& vec) {
    if (kind == GraphKind::kInvariant) {
      edge.angles = edge_angles(vec, graph.lattice_repr);
    } else {
      edge.vec = vec;
    }
  };

  std::size_t total = 0;
  for (const auto& hood : neighborhoods) total += hood.neighbors.size() + 3;
  graph.edges.reserve(total);
  graph.per_node_radius.reserve(crystal.size());

  for (std::size_t i = 0; i < crystal.size(); ++i) {
    const auto& hood = neighborhoods[i];
    graph.per_node_radius.push_back(hood.radius);
    for (const auto& nb : hood.neighbors) {
      if (!(nb.dist > 1e-8)) {
        throw Error(ErrorCode::kInvalidCrystal,
                    "atoms " + std::to_string(nb.src) + " and " + std::to_string(i) + " overlap");
      }
      Edge edge;
      edge.src = nb.src;
      edge.dst = static_cast<int>(i);
      edge.image = nb.image;
      edge.dist = nb.dist;
      attach(edge, nb.vec);
      graph.edges.push_back(std::move(edge));
    }
    for (int m = 0; m < 3; ++m) {
      const auto mi = static_cast<std::size_t>(m);
      Edge edge;
      edge.src = static_cast<int>(i);
      edge.dst = static_cast<int>(i);
      edge.image = graph.lattice_repr.coeff[mi];
      edge.slot = m + 1;
      const Vec3 vec = -graph.lattice_repr.e[mi];
      edge.dist = vec.norm();
      attach(edge, vec);
      graph.edges.push_back(std::move(edge));
    }
  }
  std::sort(graph.edges.begin(), graph.edges.end(), edge_order);

  if (options.require_connected && !is_strongly_connected(graph)) {
    throw Error(ErrorCode::kDisconnected,
                "crystal graph with k=" + std::to_string(k) +
                    " is not connected; increase k (or the radius) so that every group of atoms is linked");
  }
  return graph;
}

CrystalGraph build_invariant_graph(const Crystal& crystal, int k, BuildOptions options) {
  return build_graph(crystal, k, GraphKind::kInvariant, options);
}

CrystalGraph build_equivariant_graph(const Crystal& crystal, int k, BuildOptions options) {
  return build_graph(crystal, k, GraphKind::kEquivariant, options);
}

bool is_strongly_connected(const CrystalGraph& graph) {
  const std::size_t n = graph.num_nodes();
  if (n <= 1) return true;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::size_t components = n;
  for (const auto& e : graph.edges) {
    if (e.src < 0 || e.dst < 0 || static_cast<std::size_t>(e.src) >= n || static_cast<std::size_t>(e.dst) >= n) {
      continue;
    }
    const std::size_t a = find(static_cast<std::size_t>(e.src));
    const std::size_t b = find(static_cast<std::size_t>(e.dst));
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

GraphComparison compare_graph_features(const CrystalGraph& a, const CrystalGraph& b, double tol) {
  if (a.kind != b.kind) throw Error(ErrorCode::kKindMismatch, "cannot compare invariant and equivariant graphs");
  GraphComparison result;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (a.num_nodes() != b.num_nodes()) {
    result.max_deviation = kInf;
    result.reason = "node count differs";
    return result;
  }
  auto za = a.atomic_numbers;
  auto zb = b.atomic_numbers;
  std::sort(za.begin(), za.end());
  std::sort(zb.begin(), zb.end());
  if (za != zb) {
    result.max_deviation = kInf;
    result.reason = "atomic-number multiset differs";
    return result;
  }
  const auto fa = features_by_node(a);
  const auto fb = features_by_node(b);
  // Candidate window on distance: generous so that near-misses still report a
  // finite deviation.
  const double window = std::max(tol, 1e-6);
  double worst = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    if (a.atomic_numbers[i] != b.atomic_numbers[i]) {
      result.max_deviation = kInf;
      result.reason = "species of node " + std::to_string(i) + " differs";
      return result;
    }
    const auto& la = fa[i];
    const auto& lb = fb[i];
    if (la.size() != lb.size()) {
      result.max_deviation = kInf;
      result.reason = "edge count of node " + std::to_string(i) + " differs";
      return result;
    }
    std::vector<bool> used(lb.size(), false);
    for (const auto& t : la) {
      // lb is sorted by (slot, dist, ...): scan the slot/dist window.
      const FeatureTuple lower{t[0], t[1] - window, -kInf, -kInf, -kInf};
      auto it = std::lower_bound(lb.begin(), lb.end(), lower);
      double best = kInf;
      std::size_t best_index = lb.size();
      for (; it != lb.end() && (*it)[0] == t[0] && (*it)[1] <= t[1] + window; ++it) {
        const auto idx = static_cast<std::size_t>(it - lb.begin());
        if (used[idx]) continue;
        double dev = 0.0;
        for (std::size_t c = 1; c < 5; ++c) dev = std::max(dev, std::abs((*it)[c] - t[c]));
        if (dev < best) {
          best = dev;
          best_index = idx;
        }
      }
      if (best_index == lb.size()) {
        result.max_deviation = kInf;
        result.reason = "node " + std::to_string(i) + " has an edge without counterpart";
        return result;
      }
      used[best_index] = true;
      worst = std::max(worst, best);
    }
  }
  result.max_deviation = worst;
  result.equal = worst <= tol;
  if (!result.equal) {
    std::ostringstream msg;
    msg << "max feature deviation " << worst << " exceeds " << tol;
    result.reason = msg.str();
  }
  return result;
}

bool compare_graphs(const CrystalGraph& a, const CrystalGraph& b, double tol) {
  return compare_graph_features(a, b, tol).equal;
}

}  // namespace comformer
