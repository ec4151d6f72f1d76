#pragma once

#include "comformer/geometry.hpp"
#include "comformer/graph.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace comformer {

struct StructureDocument {
  Crystal crystal;
  std::string comment;
  std::optional<std::string> source_path;
};

/// VASP POSCAR/CONTCAR (VASP 4 and 5 headers, negative volume scale,
/// Selective dynamics, Direct/Cartesian). Velocity or predictor blocks after
/// the coordinates are rejected.
/// Errors: MalformedHeader, UnknownSpecies, CountMismatch, SingularLattice.
StructureDocument parse_poscar(std::string_view text);

/// Direct coordinates, 16 significant digits, VASP-5 species line (one
/// symbol per run of equal species, so atom order is preserved).
std::string write_poscar(const StructureDocument& doc);

/// {"lattice": [[3];3], "cart_positions": [[3];n], "atomic_numbers": [n], "comment": str}
StructureDocument parse_crystal_json(std::string_view text);
std::string write_crystal_json(const StructureDocument& doc);

/// Graph persistence. Designated lattice self-edges carry an extra "slot"
/// key (1..3); the lattice representation also stores its image coefficients.
std::string write_graph_json(const CrystalGraph& graph);
/// Errors: SchemaViolation, KindMismatch.
CrystalGraph parse_graph_json(std::string_view text);

enum class StructureFormat { kPoscar, kJson };

/// Picks JSON when the first non-blank character is '{', POSCAR otherwise.
StructureDocument parse_structure(std::string_view text);
std::string write_structure(const StructureDocument& doc, StructureFormat format);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
StructureDocument read_structure_file(const std::filesystem::path& path);

}  // namespace comformer
