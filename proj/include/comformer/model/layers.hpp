#pragma once

#include "comformer/geometry.hpp"
#include "comformer/graph.hpp"
#include "comformer/model/config.hpp"
#include "comformer/model/params.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace comformer::model {

/// Row-major matrix; one row per node or edge.
struct Dense {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Dense() = default;
  Dense(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double* row(std::size_t i) { return data.data() + i * cols; }
  [[nodiscard]] const double* row(std::size_t i) const { return data.data() + i * cols; }
};

double softplus(double x);
double sigmoid(double x);
double silu(double x);

/// y = W x + b over a named parameter pair "<name>.weight" / "<name>.bias".
struct LinearView {
  const double* weight = nullptr;
  const double* bias = nullptr;  // null for bias-free maps
  std::size_t out = 0;
  std::size_t in = 0;

  void apply(const double* x, double* y) const;
};

/// Errors: ShapeMismatch.
LinearView linear_view(const Parameters& params, const std::string& name);

/// Inference-mode batch norm on running statistics.
struct BatchNormView {
  std::vector<double> scale;
  std::vector<double> shift;

  void apply(double* x) const;
};

BatchNormView batch_norm_view(const Parameters& params, const std::string& name, double eps);

/// out_c = exp(-gamma (x - center_c)^2).
std::vector<double> rbf_expand(double x, const RbfSpec& spec);

/// Incoming-edge index: edges with dst == i, in graph order, plus the
/// designated lattice self-edge of each slot.
struct EdgeIndex {
  std::vector<std::size_t> offsets;  // size n + 1
  std::vector<std::size_t> edges;
  /// lattice[i][m] is the edge index of node i's slot-(m+1) self-edge, or npos.
  std::vector<std::array<std::size_t, 3>> lattice;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  [[nodiscard]] std::span<const std::size_t> incoming(std::size_t i) const {
    return {edges.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};

EdgeIndex build_edge_index(const CrystalGraph& graph);

/// f0_i = LN(table[Z_i]). Errors: UnknownSpecies.
Dense embed_nodes(const std::vector<int>& atomic_numbers, const Parameters& params, const ModelConfig& config);

struct InvariantEdgeEmbedding {
  std::vector<double> f_e;
  std::array<std::vector<double>, 3> f_theta;
};

/// f_e = softplus(Linear(rbf(c / dist))); f_theta_m = softplus(Linear(rbf(cos theta_m))).
/// Errors: NonpositiveDistance.
InvariantEdgeEmbedding embed_edge_invariant(double dist, const std::array<double, 3>& angles, const Parameters& params,
                                            const ModelConfig& config);

/// Distance embedding of every edge.
Dense embed_edge_distances(const CrystalGraph& graph, const Parameters& params, const ModelConfig& config);

/// Angle embeddings f_theta_m for every edge of an invariant graph.
std::array<Dense, 3> embed_edge_angles(const CrystalGraph& graph, const Parameters& params, const ModelConfig& config);

/// Node-wise transformer layer `layer` (parameters "node<layer>.*").
/// Errors: ShapeMismatch.
Dense node_transformer_layer(const Dense& nodes, const Dense& edge_features, const CrystalGraph& graph,
                             const EdgeIndex& index, const Parameters& params, const ModelConfig& config, int layer);

/// Edge-wise transformer layer `layer` (parameters "edge<layer>.*").
/// Errors: MissingSelfEdges, ShapeMismatch.
Dense edge_transformer_layer(const Dense& edge_features, const std::array<Dense, 3>& angle_features,
                             const CrystalGraph& graph, const EdgeIndex& index, const Parameters& params,
                             const ModelConfig& config, int layer);

struct SphericalFeature {
  double y0 = 0.0;
  std::array<double, 3> y1{};
  std::array<double, 5> y2{};
};

/// Real order-0/1/2 harmonics of a unit vector:
/// Y2 = (sqrt3 xy, sqrt3 yz, (3z^2 - 1)/2, sqrt3 xz, sqrt3/2 (x^2 - y^2)). Errors: NotUnit.
SphericalFeature spherical_harmonics(const Vec3& unit, double c0, double c1);

/// Order-lambda features: `channels` rows of (2 lambda + 1) components.
struct OrderFeature {
  int order = 0;
  std::size_t channels = 0;
  std::vector<double> data;
};

/// out_c = sum_k W[c][k] (feature_k . y). W is out x channels, row-major.
/// Errors: OrderMismatch, ShapeMismatch.
std::vector<double> tensor_product_out0(const OrderFeature& feature, std::span<const double> y,
                                        std::span<const double> weights, std::size_t out);

/// out_c = (sum_k W[c][k] s_k) y. W is out x scalars.size(), row-major.
/// Errors: OrderMismatch, ShapeMismatch.
OrderFeature tensor_product_out_lambda(std::span<const double> scalars, int order, std::span<const double> y,
                                       std::span<const double> weights, std::size_t out);

struct EquivariantIntermediates {
  Dense f0;     // n x C0
  Dense f1;     // n x (C12 * 3)
  Dense f2;     // n x (C12 * 5), empty columns when max_rotation_order == 1
  Dense star0;  // n x C0, the three branches of f*
  Dense star1;
  Dense star2;
  Dense f_star;
};

/// Both tensor-product stages of equivariant layer `layer` starting from
/// f' = LN(f) (passed in, n x C0). Errors: WrongGraphKind.
EquivariantIntermediates equivariant_intermediates(const Dense& f_prime, const CrystalGraph& graph,
                                                   const EdgeIndex& index, const Parameters& params,
                                                   const ModelConfig& config, int layer);

/// f_updated = sigma_equi(BN(f*)) + LN_equi(f). Errors: WrongGraphKind.
Dense equivariant_update_layer(const Dense& nodes, const CrystalGraph& graph, const EdgeIndex& index,
                               const Parameters& params, const ModelConfig& config, int layer);

}  // namespace comformer::model
