#pragma once

#include "comformer/model/config.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace comformer::model {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  [[nodiscard]] std::size_t size() const noexcept { return data.size(); }
};

enum class InitKind { kUniformFanIn, kNormal, kZeros, kOnes };

struct ParameterSpec {
  std::string name;
  std::vector<std::size_t> shape;
  InitKind init = InitKind::kUniformFanIn;
  std::size_t fan_in = 1;
};

/// Every learnable tensor the configured variant uses, in a fixed order.
std::vector<ParameterSpec> parameter_specs(const ModelConfig& config);

class Parameters {
 public:
  /// Errors: ShapeMismatch when the name is absent.
  [[nodiscard]] const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  [[nodiscard]] bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  void set(const std::string& name, Tensor tensor) { tensors_[name] = std::move(tensor); }
  [[nodiscard]] const std::map<std::string, Tensor>& all() const noexcept { return tensors_; }
  std::map<std::string, Tensor>& all() noexcept { return tensors_; }

 private:
  std::map<std::string, Tensor> tensors_;
};

/// Seeded initialization. Each tensor draws from its own stream (seed, name),
/// so tensors do not shift when others are added. Linear weights and biases
/// are uniform in +-1/sqrt(fan_in); batch norms start at identity statistics.
Parameters init_parameters(const ModelConfig& config);

/// Errors: ShapeMismatch listing the first missing or misshapen tensor.
void check_parameters(const Parameters& params, const ModelConfig& config);

/// {"tensors": {name: {"shape": [...], "data": [...]}}}
std::string write_parameters_json(const Parameters& params);
/// Errors: SchemaViolation.
Parameters parse_parameters_json(std::string_view text);

/// Replaces rows of the species table from CSV lines "Z,v1,...,vD".
/// Errors: SchemaViolation, ShapeMismatch, UnknownSpecies.
void load_species_table_csv(Parameters& params, const ModelConfig& config, std::string_view csv);

}  // namespace comformer::model
