#include "comformer/model/params.hpp"

#include "comformer/error.hpp"
#include "comformer/rng.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>

namespace comformer::model {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct SpecBuilder {
  std::vector<ParameterSpec> specs;

  void linear(const std::string& name, std::size_t out, std::size_t in, bool bias = true) {
    specs.push_back({name + ".weight", {out, in}, InitKind::kUniformFanIn, in});
    if (bias) specs.push_back({name + ".bias", {out}, InitKind::kUniformFanIn, in});
  }

  void batch_norm(const std::string& name, std::size_t dim) {
    specs.push_back({name + ".gamma", {dim}, InitKind::kOnes, 1});
    specs.push_back({name + ".beta", {dim}, InitKind::kZeros, 1});
    specs.push_back({name + ".running_mean", {dim}, InitKind::kZeros, 1});
    specs.push_back({name + ".running_var", {dim}, InitKind::kOnes, 1});
  }
};

[[noreturn]] void shape_error(const std::string& what) { throw Error(ErrorCode::kShapeMismatch, what); }

}  // namespace

std::vector<ParameterSpec> parameter_specs(const ModelConfig& config) {
  config.validate();
  const auto h = static_cast<std::size_t>(config.hidden_dim);
  const auto e = static_cast<std::size_t>(config.embed_dim_species);
  const auto c0 = static_cast<std::size_t>(config.tp_order0);
  const auto c12 = static_cast<std::size_t>(config.tp_order12);
  SpecBuilder b;
  b.specs.push_back({"species_table", {119, e}, InitKind::kNormal, 1});
  b.linear("embed.node", h, e);
  b.linear("embed.edge", h, static_cast<std::size_t>(config.rbf_dist.count));
  if (config.variant == Variant::kIComFormer) b.linear("embed.angle", h, static_cast<std::size_t>(config.rbf_angle.count));

  for (int l = 0; l < config.n_node_layers; ++l) {
    const std::string p = "node" + std::to_string(l);
    for (const char* name : {".LN_Q", ".LN_K", ".LN_V", ".LN_E"}) b.linear(p + name, h, h);
    b.linear(p + ".sigma_K.fc1", h, 3 * h);
    b.linear(p + ".sigma_K.fc2", h, h);
    b.linear(p + ".sigma_V.fc1", h, 3 * h);
    b.linear(p + ".sigma_V.fc2", h, h);
    b.batch_norm(p + ".BN_alpha", h);
    b.batch_norm(p + ".BN_msg", h);
  }
  if (config.variant == Variant::kIComFormer) {
    for (int l = 0; l < config.n_edge_layers; ++l) {
      const std::string p = "edge" + std::to_string(l);
      for (const char* name : {".LN_Q", ".LN_K", ".LN_V", ".LN_theta"}) b.linear(p + name, h, h);
      for (int m = 1; m <= 3; ++m) {
        b.linear(p + ".LN_K_theta" + std::to_string(m), h, h);
        b.linear(p + ".LN_V_theta" + std::to_string(m), h, h);
      }
      b.linear(p + ".sigma_K.fc1", h, 3 * h);
      b.linear(p + ".sigma_K.fc2", h, h);
      b.linear(p + ".sigma_V.fc1", h, 3 * h);
      b.linear(p + ".sigma_V.fc2", h, h);
      b.batch_norm(p + ".BN_alpha", h);
      b.batch_norm(p + ".BN_msg", h);
    }
  } else {
    for (int l = 0; l < config.n_equivariant_layers; ++l) {
      const std::string p = "equi" + std::to_string(l);
      b.linear(p + ".LN", c0, h);
      // Tensor-product path weights are bilinear maps: no bias.
      b.linear(p + ".tp1_0", c0, c0, false);
      b.linear(p + ".tp1_1", c12, c0, false);
      b.linear(p + ".tp1_2", c12, c0, false);
      b.linear(p + ".tp2_0", c0, c0, false);
      b.linear(p + ".tp2_1", c0, c12, false);
      b.linear(p + ".tp2_2", c0, c12, false);
      b.batch_norm(p + ".BN", c0);
      b.linear(p + ".sigma_equi", h, c0);
      b.linear(p + ".LN_equi", h, h);
    }
  }
  b.linear("readout.fc1", h, h);
  b.linear("readout.fc2", 1, h);
  return std::move(b.specs);
}

const Tensor& Parameters::at(const std::string& name) const {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) shape_error("missing parameter '" + name + "'");
  return it->second;
}

Tensor& Parameters::at(const std::string& name) {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) shape_error("missing parameter '" + name + "'");
  return it->second;
}

Parameters init_parameters(const ModelConfig& config) {
  Parameters params;
  for (const auto& spec : parameter_specs(config)) {
    Tensor t;
    t.shape = spec.shape;
    std::size_t count = 1;
    for (auto d : spec.shape) count *= d;
    t.data.assign(count, 0.0);
    Rng rng(mix(config.seed) ^ fnv1a(spec.name));
    switch (spec.init) {
      case InitKind::kUniformFanIn: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
        for (auto& v : t.data) v = rng.uniform(-bound, bound);
        break;
      }
      case InitKind::kNormal:
        for (auto& v : t.data) v = rng.normal();
        break;
      case InitKind::kZeros:
        break;
      case InitKind::kOnes:
        std::fill(t.data.begin(), t.data.end(), 1.0);
        break;
    }
    params.set(spec.name, std::move(t));
  }
  return params;
}

void check_parameters(const Parameters& params, const ModelConfig& config) {
  for (const auto& spec : parameter_specs(config)) {
    const Tensor& t = params.at(spec.name);
    std::size_t count = 1;
    for (auto d : spec.shape) count *= d;
    if (t.shape != spec.shape || t.data.size() != count) shape_error("parameter '" + spec.name + "' has the wrong shape");
    for (double v : t.data) {
      if (!std::isfinite(v)) throw Error(ErrorCode::kNonfiniteInput, "parameter '" + spec.name + "' is not finite");
    }
  }
}

std::string write_parameters_json(const Parameters& params) {
  nlohmann::ordered_json tensors = nlohmann::ordered_json::object();
  for (const auto& [name, t] : params.all()) {
    tensors[name] = {{"shape", t.shape}, {"data", t.data}};
  }
  nlohmann::ordered_json out;
  out["format"] = "comformer-parameters";
  out["version"] = 1;
  out["tensors"] = std::move(tensors);
  return out.dump() + "\n";
}

Parameters parse_parameters_json(std::string_view text) {
  const auto doc = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::kSchemaViolation, "parameter file is not a JSON object");
  const auto it = doc.find("tensors");
  if (it == doc.end() || !it->is_object()) throw Error(ErrorCode::kSchemaViolation, "parameter file lacks 'tensors'");
  Parameters params;
  try {
    for (const auto& [name, value] : it->items()) {
      if (!value.is_object() || !value.contains("shape") || !value.contains("data")) {
        throw Error(ErrorCode::kSchemaViolation, "tensor '" + name + "' needs shape and data");
      }
      Tensor t;
      t.shape = value["shape"].get<std::vector<std::size_t>>();
      t.data = value["data"].get<std::vector<double>>();
      std::size_t count = 1;
      for (auto d : t.shape) count *= d;
      if (count != t.data.size()) throw Error(ErrorCode::kSchemaViolation, "tensor '" + name + "' data does not match its shape");
      params.set(name, std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, e.what());
  }
  return params;
}

void load_species_table_csv(Parameters& params, const ModelConfig& config, std::string_view csv) {
  Tensor& table = params.at("species_table");
  const auto dim = static_cast<std::size_t>(config.embed_dim_species);
  std::size_t line_no = 0;
  while (!csv.empty()) {
    const std::size_t end = csv.find('\n');
    std::string_view line = csv.substr(0, end);
    csv = end == std::string_view::npos ? std::string_view{} : csv.substr(end + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> values;
    while (true) {
      const std::size_t comma = line.find(',');
      std::string_view field = line.substr(0, comma);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::kSchemaViolation, "species table line " + std::to_string(line_no) + ": bad number");
      }
      values.push_back(v);
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    if (values.size() != dim + 1) shape_error("species table line " + std::to_string(line_no) + " has the wrong width");
    const double z = values.front();
    if (z != std::floor(z) || z < 1 || z > 118) throw Error(ErrorCode::kUnknownSpecies, "species table row for Z=" + std::to_string(z));
    const auto row = static_cast<std::size_t>(z);
    std::copy(values.begin() + 1, values.end(), table.data.begin() + static_cast<std::ptrdiff_t>(row * dim));
  }
}

}  // namespace comformer::model
