#include "comformer/model/config.hpp"

#include "comformer/error.hpp"

#include <json.hpp>

#include <cmath>

namespace comformer::model {
namespace {

using Json = nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::kInvalidSpec, what); }

template <typename T>
void read(const Json& doc, const char* key, T& out) {
  const auto it = doc.find(key);
  if (it == doc.end()) return;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw Error(ErrorCode::kSchemaViolation, std::string(key) + " must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw Error(ErrorCode::kSchemaViolation, std::string(key) + " must be an integer");
    } else {
      if (!it->is_number()) throw Error(ErrorCode::kSchemaViolation, std::string(key) + " must be a number");
    }
    out = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string(key) + ": " + e.what());
  }
}

void read_rbf(const Json& doc, const char* key, RbfSpec& out) {
  const auto it = doc.find(key);
  if (it == doc.end()) return;
  if (!it->is_object()) throw Error(ErrorCode::kSchemaViolation, std::string(key) + " must be an object");
  read(*it, "count", out.count);
  read(*it, "lo", out.lo);
  read(*it, "hi", out.hi);
}

Json rbf_json(const RbfSpec& spec) { return Json{{"count", spec.count}, {"lo", spec.lo}, {"hi", spec.hi}}; }

}  // namespace

std::string_view variant_name(Variant variant) {
  return variant == Variant::kIComFormer ? "icomformer" : "ecomformer";
}

std::vector<double> RbfSpec::centers() const {
  std::vector<double> c(static_cast<std::size_t>(count));
  if (count == 1) {
    c[0] = lo;
    return c;
  }
  const double step = (hi - lo) / (count - 1);
  for (int i = 0; i < count; ++i) c[static_cast<std::size_t>(i)] = lo + step * i;
  c.back() = hi;
  return c;
}

double RbfSpec::gamma() const {
  if (count == 1) return 1.0;
  const double step = (hi - lo) / (count - 1);
  return 1.0 / (2.0 * step * step);
}

void ModelConfig::validate() const {
  if (hidden_dim < 1 || embed_dim_species < 1) bad("hidden_dim and embed_dim_species must be >= 1");
  if (n_node_layers < 1) bad("n_node_layers must be >= 1");
  if (n_edge_layers < 0 || n_equivariant_layers < 0) bad("layer counts must be >= 0");
  if (tp_order0 < 1 || tp_order12 < 1) bad("tensor-product channel counts must be >= 1");
  if (max_rotation_order != 1 && max_rotation_order != 2) bad("max_rotation_order must be 1 or 2");
  for (const RbfSpec* spec : {&rbf_dist, &rbf_angle}) {
    if (spec->count < 1) bad("RBF count must be >= 1");
    if (!std::isfinite(spec->lo) || !std::isfinite(spec->hi) || (spec->count > 1 && !(spec->hi > spec->lo))) {
      bad("RBF centers must be finite and strictly increasing");
    }
  }
  if (!std::isfinite(potential_constant) || potential_constant == 0.0) bad("potential_constant must be finite and nonzero");
  if (!std::isfinite(sh_c0) || !std::isfinite(sh_c1)) bad("spherical-harmonic constants must be finite");
  if (!(bn_eps > 0.0) || !(bn_momentum >= 0.0 && bn_momentum <= 1.0)) bad("invalid batch-norm settings");
}

ModelConfig parse_model_config(std::string_view json_text) {
  const Json doc = Json::parse(json_text.begin(), json_text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::kSchemaViolation, "model config must be a JSON object");
  ModelConfig config;
  if (const auto it = doc.find("variant"); it != doc.end()) {
    if (*it == "icomformer") {
      config.variant = Variant::kIComFormer;
    } else if (*it == "ecomformer") {
      config.variant = Variant::kEComFormer;
    } else {
      throw Error(ErrorCode::kSchemaViolation, "variant must be 'icomformer' or 'ecomformer'");
    }
  }
  read(doc, "hidden_dim", config.hidden_dim);
  read(doc, "embed_dim_species", config.embed_dim_species);
  read(doc, "n_node_layers", config.n_node_layers);
  read(doc, "n_edge_layers", config.n_edge_layers);
  read(doc, "n_equivariant_layers", config.n_equivariant_layers);
  read(doc, "potential_constant", config.potential_constant);
  read_rbf(doc, "rbf_dist", config.rbf_dist);
  read_rbf(doc, "rbf_angle", config.rbf_angle);
  read(doc, "sh_c0", config.sh_c0);
  read(doc, "sh_c1", config.sh_c1);
  if (const auto it = doc.find("tp_channels"); it != doc.end()) {
    if (!it->is_object()) throw Error(ErrorCode::kSchemaViolation, "tp_channels must be an object");
    read(*it, "order0", config.tp_order0);
    read(*it, "order12", config.tp_order12);
  }
  read(doc, "max_rotation_order", config.max_rotation_order);
  read(doc, "bn_eps", config.bn_eps);
  read(doc, "bn_momentum", config.bn_momentum);
  read(doc, "seed", config.seed);
  read(doc, "use_edge_layer", config.use_edge_layer);
  read(doc, "use_equivariant_layer", config.use_equivariant_layer);
  config.validate();
  return config;
}

std::string write_model_config(const ModelConfig& config) {
  nlohmann::ordered_json out;
  out["variant"] = std::string(variant_name(config.variant));
  out["hidden_dim"] = config.hidden_dim;
  out["embed_dim_species"] = config.embed_dim_species;
  out["n_node_layers"] = config.n_node_layers;
  out["n_edge_layers"] = config.n_edge_layers;
  out["n_equivariant_layers"] = config.n_equivariant_layers;
  out["potential_constant"] = config.potential_constant;
  out["rbf_dist"] = rbf_json(config.rbf_dist);
  out["rbf_angle"] = rbf_json(config.rbf_angle);
  out["sh_c0"] = config.sh_c0;
  out["sh_c1"] = config.sh_c1;
  out["tp_channels"] = {{"order0", config.tp_order0}, {"order12", config.tp_order12}};
  out["max_rotation_order"] = config.max_rotation_order;
  out["bn_eps"] = config.bn_eps;
  out["bn_momentum"] = config.bn_momentum;
  out["seed"] = config.seed;
  out["use_edge_layer"] = config.use_edge_layer;
  out["use_equivariant_layer"] = config.use_equivariant_layer;
  return out.dump(2) + "\n";
}

}  // namespace comformer::model
