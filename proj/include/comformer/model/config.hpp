#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace comformer::model {

enum class Variant { kIComFormer, kEComFormer };

std::string_view variant_name(Variant variant);

/// Evenly spaced Gaussian centers on [lo, hi].
struct RbfSpec {
  int count = 256;
  double lo = -4.0;
  double hi = 0.0;

  [[nodiscard]] std::vector<double> centers() const;
  /// 1 / (2 * spacing^2)
  [[nodiscard]] double gamma() const;
};

struct ModelConfig {
  Variant variant = Variant::kEComFormer;
  int hidden_dim = 64;
  int embed_dim_species = 92;
  /// Total node-wise transformer layers. iComFormer: node, edge, then the
  /// remaining node layers. eComFormer: node, equivariant, remaining node layers.
  int n_node_layers = 2;
  int n_edge_layers = 1;
  int n_equivariant_layers = 1;
  double potential_constant = -0.75;
  RbfSpec rbf_dist{256, -4.0, 0.0};
  RbfSpec rbf_angle{256, -1.0, 1.0};
  double sh_c0 = 1.0;
  double sh_c1 = 1.0;
  int tp_order0 = 128;
  int tp_order12 = 8;
  int max_rotation_order = 2;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
  std::uint64_t seed = 0;
  /// Ablation switches: disabling removes all angle / vector dependence.
  bool use_edge_layer = true;
  bool use_equivariant_layer = true;

  /// Errors: InvalidSpec.
  void validate() const;
};

/// JSON with the field names above; missing keys keep their defaults.
/// Errors: SchemaViolation, InvalidSpec.
ModelConfig parse_model_config(std::string_view json_text);
std::string write_model_config(const ModelConfig& config);

}  // namespace comformer::model
