#include "comformer/model/comformer.hpp"

#include "comformer/error.hpp"
#include "comformer/geometry.hpp"
#include "comformer/kernels.hpp"

#include <cmath>
#include <numbers>

namespace comformer::model {

GraphKind required_graph_kind(const ModelConfig& config) {
  return config.variant == Variant::kIComFormer ? GraphKind::kInvariant : GraphKind::kEquivariant;
}

ForwardResult forward(const CrystalGraph& graph, const ModelConfig& config, const Parameters& params) {
  config.validate();
  if (graph.kind != required_graph_kind(config)) {
    throw Error(ErrorCode::kWrongGraphKind, std::string(variant_name(config.variant)) + " needs a " +
                                                std::string(graph_kind_name(required_graph_kind(config))) + " graph");
  }
  if (graph.num_nodes() == 0) throw Error(ErrorCode::kInvalidCrystal, "graph has no nodes");
  const EdgeIndex index = build_edge_index(graph);
  Dense nodes = embed_nodes(graph.atomic_numbers, params, config);
  Dense edges = embed_edge_distances(graph, params, config);

  nodes = node_transformer_layer(nodes, edges, graph, index, params, config, 0);
  if (config.variant == Variant::kIComFormer) {
    if (config.use_edge_layer && config.n_edge_layers > 0) {
      const auto angles = embed_edge_angles(graph, params, config);
      for (int l = 0; l < config.n_edge_layers; ++l) {
        edges = edge_transformer_layer(edges, angles, graph, index, params, config, l);
      }
    }
  } else if (config.use_equivariant_layer) {
    for (int l = 0; l < config.n_equivariant_layers; ++l) {
      nodes = equivariant_update_layer(nodes, graph, index, params, config, l);
    }
  }
  for (int l = 1; l < config.n_node_layers; ++l) {
    nodes = node_transformer_layer(nodes, edges, graph, index, params, config, l);
  }

  ForwardResult result;
  result.pooled.assign(nodes.cols, 0.0);
  const double inv_n = 1.0 / static_cast<double>(nodes.rows);
  for (std::size_t i = 0; i < nodes.rows; ++i) kernels::axpy(inv_n, nodes.row(i), result.pooled.data(), nodes.cols);

  const LinearView fc1 = linear_view(params, "readout.fc1");
  const LinearView fc2 = linear_view(params, "readout.fc2");
  std::vector<double> hidden(fc1.out);
  fc1.apply(result.pooled.data(), hidden.data());
  for (double& v : hidden) v = silu(v);
  fc2.apply(hidden.data(), &result.prediction);
  result.nodes = std::move(nodes);
  return result;
}

std::vector<double> featurize(const CrystalGraph& graph, const ModelConfig& config, const Parameters& params) {
  return forward(graph, config, params).pooled;
}

double predict(const CrystalGraph& graph, const ModelConfig& config, const Parameters& params) {
  return forward(graph, config, params).prediction;
}

TwoHopResult two_hop_angle_check(const CrystalGraph& graph, const ModelConfig& config) {
  if (graph.kind != GraphKind::kEquivariant) throw Error(ErrorCode::kWrongGraphKind, "two-hop check needs an equivariant graph");
  const auto c0 = static_cast<std::size_t>(config.tp_order0);
  const auto c12 = static_cast<std::size_t>(config.tp_order12);
  const std::size_t n = graph.num_nodes();

  ModelConfig unit = config;
  unit.max_rotation_order = 1;
  Parameters params;
  const auto ones = [](std::size_t out, std::size_t in, double value) {
    return Tensor{{out, in}, std::vector<double>(out * in, value)};
  };
  // Only the order-1 path is probed; the others are zeroed so star1 is isolated.
  params.set("equi0.tp1_0.weight", ones(c0, c0, 0.0));
  params.set("equi0.tp1_1.weight", ones(c12, c0, 1.0));
  params.set("equi0.tp1_2.weight", ones(c12, c0, 0.0));
  params.set("equi0.tp2_0.weight", ones(c0, c0, 0.0));
  params.set("equi0.tp2_1.weight", ones(c0, c12, 1.0));
  params.set("equi0.tp2_2.weight", ones(c0, c12, 0.0));

  Dense f_prime(n, c0);
  std::fill(f_prime.data.begin(), f_prime.data.end(), 1.0);
  const EdgeIndex index = build_edge_index(graph);
  const EquivariantIntermediates mid = equivariant_intermediates(f_prime, graph, index, params, unit, 0);

  TwoHopResult result;
  result.tp_value.resize(n);
  result.oracle.resize(n);
  const double scale = static_cast<double>(c12) * static_cast<double>(c0) * config.sh_c1 * config.sh_c1;
  for (std::size_t i = 0; i < n; ++i) {
    double outer = 0.0;
    for (std::size_t ji : index.incoming(i)) {
      const Edge& e_ji = graph.edges[ji];
      const auto j = static_cast<std::size_t>(e_ji.src);
      double inner = 0.0;
      for (std::size_t mj : index.incoming(j)) {
        const Vec3& a = *graph.edges[mj].vec;
        const Vec3& b = *e_ji.vec;
        inner += a.dot(b) / (a.norm() * b.norm());
      }
      outer += inner / static_cast<double>(index.incoming(j).size());
    }
    result.oracle[i] = scale * outer / static_cast<double>(index.incoming(i).size());
    result.tp_value[i] = mid.star1.row(i)[0];
    const double rel = std::abs(result.tp_value[i] - result.oracle[i]) / std::max(1.0, std::abs(result.oracle[i]));
    result.max_relative_error = std::max(result.max_relative_error, rel);
  }
  return result;
}

CrystalGraph deform_angles(const CrystalGraph& graph, Rng& rng) {
  CrystalGraph out = graph;
  for (Edge& edge : out.edges) {
    if (edge.angles) {
      for (double& a : *edge.angles) a = rng.uniform(0.0, std::numbers::pi);
    }
    if (edge.vec) *edge.vec = random_rotation(rng) * *edge.vec;
  }
  return out;
}

}  // namespace comformer::model
