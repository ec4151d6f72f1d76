#pragma once

#include "comformer/graph.hpp"
#include "comformer/model/config.hpp"
#include "comformer/model/layers.hpp"
#include "comformer/model/params.hpp"
#include "comformer/rng.hpp"

#include <vector>

namespace comformer::model {

/// The graph kind a variant consumes.
GraphKind required_graph_kind(const ModelConfig& config);

struct ForwardResult {
  Dense nodes;                 // final node states
  std::vector<double> pooled;  // mean over nodes
  double prediction = 0.0;
};

/// Full forward pass with running batch-norm statistics.
/// Errors: WrongGraphKind, ShapeMismatch, MissingSelfEdges.
ForwardResult forward(const CrystalGraph& graph, const ModelConfig& config, const Parameters& params);

/// Mean-pooled final node states (hidden_dim values).
std::vector<double> featurize(const CrystalGraph& graph, const ModelConfig& config, const Parameters& params);

/// readout.fc2(silu(readout.fc1(pooled))).
double predict(const CrystalGraph& graph, const ModelConfig& config, const Parameters& params);

struct TwoHopResult {
  std::vector<double> tp_value;
  std::vector<double> oracle;
  double max_relative_error = 0.0;
};

/// Runs the order-1 tensor-product branch with unit path weights and
/// constant scalar features, and compares each node against the direct sum
///   C12 C0 c1^2 / |N_i| * sum_{j in N_i} 1/|N_j| sum_{m in N_j} cos(e_mj, e_ji).
/// Only tp_order0, tp_order12 and sh_c1 of `config` are used.
/// Errors: WrongGraphKind.
TwoHopResult two_hop_angle_check(const CrystalGraph& graph, const ModelConfig& config);

/// Changes every edge direction while keeping every distance: angles of an
/// invariant graph are redrawn, vectors of an equivariant graph are rotated
/// independently. Distance-only models cannot see the difference.
CrystalGraph deform_angles(const CrystalGraph& graph, Rng& rng);

}  // namespace comformer::model
