#include "comformer/structure_io.hpp"

#include "comformer/elements.hpp"
#include "comformer/error.hpp"

#include <json.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace comformer {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  // A trailing newline does not open another line.
  if (!lines.empty() && lines.back().empty() && !text.empty() && text.back() == '\n') lines.pop_back();
  return lines;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\v' || c == '\f'; }

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool is_blank(std::string_view line) { return tokens(line).empty(); }

std::optional<double> to_double(std::string_view token) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<long long> to_count(std::string_view token) {
  long long value = 0;
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::kMalformedHeader, what); }

Vec3 parse_triplet(std::string_view line, const std::string& what, bool exact) {
  const auto t = tokens(line);
  if (t.size() < 3 || (exact && t.size() != 3)) malformed(what + ": expected three numbers");
  Vec3 v;
  for (int a = 0; a < 3; ++a) {
    const auto value = to_double(t[static_cast<std::size_t>(a)]);
    if (!value) malformed(what + ": '" + std::string(t[static_cast<std::size_t>(a)]) + "' is not a finite number");
    v[a] = *value;
  }
  return v;
}

int species_from_token(std::string_view token) {
  // POTCAR-style decorations: "Fe_pv", "Fe/3f2c...".
  const std::size_t cut = token.find_first_of("_/");
  if (cut != std::string_view::npos) token = token.substr(0, cut);
  const auto z = atomic_number_from_symbol(token);
  if (!z) throw Error(ErrorCode::kUnknownSpecies, "unknown element symbol '" + std::string(token) + "'");
  return *z;
}

bool starts_alpha(std::string_view token) {
  return !token.empty() && std::isalpha(static_cast<unsigned char>(token.front())) != 0;
}

// Shortest text that parses back to the same double.
std::string format_double(double value) {
  char buffer[64];
  const auto res = std::to_chars(buffer, buffer + sizeof(buffer), value == 0.0 ? 0.0 : value);
  return {buffer, res.ptr};
}

std::string single_line(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

// ---- JSON helpers ----

[[noreturn]] void schema(const std::string& what) { throw Error(ErrorCode::kSchemaViolation, what); }

const Json& require(const Json& obj, const char* key) {
  if (!obj.is_object()) schema("expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) schema(std::string("missing key '") + key + "'");
  return *it;
}

double number(const Json& value, const std::string& what) {
  if (!value.is_number()) schema(what + " must be a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) schema(what + " must be finite");
  return v;
}

long long integer(const Json& value, const std::string& what) {
  if (!value.is_number_integer()) schema(what + " must be an integer");
  return value.get<long long>();
}

Vec3 vec3(const Json& value, const std::string& what) {
  if (!value.is_array() || value.size() != 3) schema(what + " must be an array of three numbers");
  return {number(value[0], what), number(value[1], what), number(value[2], what)};
}

ImageCoeff image3(const Json& value, const std::string& what) {
  if (!value.is_array() || value.size() != 3) schema(what + " must be an array of three integers");
  ImageCoeff k{};
  for (std::size_t a = 0; a < 3; ++a) {
    const long long v = integer(value[a], what);
    if (v < -1000000 || v > 1000000) schema(what + " coefficient out of range");
    k[a] = static_cast<int>(v);
  }
  return k;
}

OrderedJson to_json(const Vec3& v) { return OrderedJson::array({v[0], v[1], v[2]}); }

OrderedJson to_json(const ImageCoeff& k) { return OrderedJson::array({k[0], k[1], k[2]}); }

Json parse_json_text(std::string_view text) {
  Json doc = Json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded()) schema("text is not valid JSON");
  return doc;
}

std::string dump(const OrderedJson& doc) {
  return doc.dump(1, ' ', false, nlohmann::detail::error_handler_t::replace) + "\n";
}

}  // namespace

StructureDocument parse_poscar(std::string_view text) {
  const auto lines = split_lines(text);
  std::size_t cursor = 0;
  const auto next_line = [&](const char* what) -> std::string_view {
    if (cursor >= lines.size()) malformed(std::string("unexpected end of file before ") + what);
    return lines[cursor++];
  };

  std::string comment(next_line("comment"));

  const auto scale_tokens = tokens(next_line("scale factor"));
  if (scale_tokens.size() != 1) malformed("scale line must hold exactly one number (per-axis scaling unsupported)");
  const auto scale = to_double(scale_tokens.front());
  if (!scale || *scale == 0.0) malformed("scale factor must be a nonzero finite number");

  Mat3 rows;
  for (int r = 0; r < 3; ++r) {
    rows.row(r) = parse_triplet(next_line("lattice vectors"), "lattice vector " + std::to_string(r + 1), true).transpose();
  }

  auto species_line = tokens(next_line("species or counts"));
  if (species_line.empty()) malformed("empty species/counts line");
  std::vector<std::string_view> symbols;
  std::vector<std::string_view> count_tokens;
  if (starts_alpha(species_line.front())) {
    symbols = species_line;
    count_tokens = tokens(next_line("atom counts"));
  } else {
    count_tokens = species_line;
    // VASP 4 files keep the symbols in the comment line, if anywhere.
    symbols = tokens(comment);
    if (symbols.size() < count_tokens.size()) {
      throw Error(ErrorCode::kUnknownSpecies, "POSCAR has no species line and the comment does not name the species");
    }
    symbols.resize(count_tokens.size());
  }
  if (count_tokens.empty() || count_tokens.size() != symbols.size()) {
    malformed("species and counts lines have different lengths");
  }
  std::vector<int> species;
  long long total = 0;
  for (std::size_t s = 0; s < count_tokens.size(); ++s) {
    const auto count = to_count(count_tokens[s]);
    if (!count || *count < 1 || *count > 100000000) malformed("invalid atom count '" + std::string(count_tokens[s]) + "'");
    total += *count;
    if (total > 100000000) malformed("atom count too large");
  }
  for (std::size_t s = 0; s < count_tokens.size(); ++s) {
    const int z = species_from_token(symbols[s]);
    const long long count = *to_count(count_tokens[s]);
    if (static_cast<long long>(species.size()) + count <= static_cast<long long>(lines.size())) {
      species.insert(species.end(), static_cast<std::size_t>(count), z);
    } else {
      species.resize(static_cast<std::size_t>(lines.size()) + 1, z);
    }
  }

  std::string_view mode = next_line("coordinate mode");
  const auto mode_tokens = tokens(mode);
  if (mode_tokens.empty()) malformed("empty coordinate mode line");
  bool selective = false;
  char first = static_cast<char>(std::tolower(static_cast<unsigned char>(mode_tokens.front().front())));
  if (first == 's') {
    selective = true;
    const auto t = tokens(next_line("coordinate mode"));
    if (t.empty()) malformed("empty coordinate mode line");
    first = static_cast<char>(std::tolower(static_cast<unsigned char>(t.front().front())));
  }
  bool cartesian = false;
  if (first == 'c' || first == 'k') {
    cartesian = true;
  } else if (first != 'd') {
    malformed("coordinate mode must be Direct or Cartesian");
  }

  std::vector<Vec3> coords;
  while (cursor < lines.size() && !is_blank(lines[cursor])) {
    const std::string_view line = lines[cursor++];
    coords.push_back(parse_triplet(line, "coordinate line " + std::to_string(coords.size() + 1), false));
    if (selective) {
      const auto t = tokens(line);
      for (std::size_t f = 3; f < std::min<std::size_t>(t.size(), 6); ++f) {
        if (t[f] != "T" && t[f] != "F" && t[f] != "t" && t[f] != "f") {
          malformed("selective dynamics flag must be T or F");
        }
      }
    }
  }
  for (; cursor < lines.size(); ++cursor) {
    if (!is_blank(lines[cursor])) malformed("content after the coordinate block (velocities/predictor data) is unsupported");
  }
  if (static_cast<long long>(coords.size()) != total) {
    throw Error(ErrorCode::kCountMismatch, "counts line sums to " + std::to_string(total) + " but " +
                                               std::to_string(coords.size()) + " coordinate lines follow");
  }

  double factor = *scale;
  if (factor < 0.0) {
    const double raw_volume = std::abs(rows.determinant());
    if (!(raw_volume > kMinCellVolume)) throw Error(ErrorCode::kSingularLattice, "lattice has zero volume");
    factor = std::cbrt(-factor / raw_volume);
  }
  const Lattice lattice(rows * factor);
  std::vector<Vec3> positions;
  positions.reserve(coords.size());
  for (const auto& c : coords) {
    positions.push_back(cartesian ? Vec3(c * factor) : lattice.frac_to_cart(c));
  }
  return {Crystal(lattice, std::move(positions), std::move(species)), std::move(comment), std::nullopt};
}

std::string write_poscar(const StructureDocument& doc) {
  const Crystal& crystal = doc.crystal;
  std::ostringstream out;
  out << single_line(doc.comment) << '\n';
  out << "1.0\n";
  for (int r = 0; r < 3; ++r) {
    const Vec3 row = crystal.lattice().row(r);
    out << "  " << format_double(row[0]) << ' ' << format_double(row[1]) << ' ' << format_double(row[2]) << '\n';
  }
  std::vector<std::pair<int, std::size_t>> runs;
  for (int z : crystal.species()) {
    if (runs.empty() || runs.back().first != z) {
      runs.emplace_back(z, 1);
    } else {
      ++runs.back().second;
    }
  }
  for (std::size_t r = 0; r < runs.size(); ++r) out << (r ? " " : "") << element_symbol(runs[r].first);
  out << '\n';
  for (std::size_t r = 0; r < runs.size(); ++r) out << (r ? " " : "") << runs[r].second;
  out << '\n';
  out << "Direct\n";
  for (const auto& p : crystal.positions()) {
    const Vec3 f = crystal.lattice().cart_to_frac(p);
    out << "  " << format_double(f[0]) << ' ' << format_double(f[1]) << ' ' << format_double(f[2]) << '\n';
  }
  return out.str();
}

StructureDocument parse_crystal_json(std::string_view text) {
  try {
    const Json doc = parse_json_text(text);
    if (!doc.is_object()) schema("top level must be an object");
    const Json& lattice_json = require(doc, "lattice");
    if (!lattice_json.is_array() || lattice_json.size() != 3) schema("lattice must be a 3x3 array");
    Mat3 rows;
    for (int r = 0; r < 3; ++r) rows.row(r) = vec3(lattice_json[static_cast<std::size_t>(r)], "lattice row").transpose();

    const Json& pos_json = require(doc, "cart_positions");
    const Json& z_json = require(doc, "atomic_numbers");
    if (!pos_json.is_array() || !z_json.is_array()) schema("cart_positions and atomic_numbers must be arrays");
    if (pos_json.empty()) schema("a crystal needs at least one atom");
    if (pos_json.size() != z_json.size()) schema("cart_positions and atomic_numbers differ in length");
    std::vector<Vec3> positions;
    std::vector<int> species;
    positions.reserve(pos_json.size());
    species.reserve(z_json.size());
    for (const auto& p : pos_json) positions.push_back(vec3(p, "cart_positions entry"));
    for (const auto& z : z_json) {
      const long long value = integer(z, "atomic_numbers entry");
      if (value < 1 || value > kMaxAtomicNumber) schema("atomic number outside 1..118");
      species.push_back(static_cast<int>(value));
    }
    std::string comment;
    if (const auto it = doc.find("comment"); it != doc.end()) {
      if (!it->is_string()) schema("comment must be a string");
      comment = it->get<std::string>();
    }
    return {Crystal(Lattice(rows), std::move(positions), std::move(species)), std::move(comment), std::nullopt};
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    schema(e.what());
  }
}

std::string write_crystal_json(const StructureDocument& doc) {
  OrderedJson out;
  OrderedJson lattice = OrderedJson::array();
  for (int r = 0; r < 3; ++r) lattice.push_back(to_json(Vec3(doc.crystal.lattice().row(r))));
  out["lattice"] = std::move(lattice);
  OrderedJson positions = OrderedJson::array();
  for (const auto& p : doc.crystal.positions()) positions.push_back(to_json(p));
  out["cart_positions"] = std::move(positions);
  out["atomic_numbers"] = doc.crystal.species();
  out["comment"] = doc.comment;
  return dump(out);
}

std::string write_graph_json(const CrystalGraph& graph) {
  OrderedJson out;
  out["kind"] = std::string(graph_kind_name(graph.kind));
  out["atomic_numbers"] = graph.atomic_numbers;
  OrderedJson repr;
  repr["e1"] = to_json(graph.lattice_repr.e[0]);
  repr["e2"] = to_json(graph.lattice_repr.e[1]);
  repr["e3"] = to_json(graph.lattice_repr.e[2]);
  repr["c1"] = to_json(graph.lattice_repr.coeff[0]);
  repr["c2"] = to_json(graph.lattice_repr.coeff[1]);
  repr["c3"] = to_json(graph.lattice_repr.coeff[2]);
  repr["tie_degenerate"] = graph.lattice_repr.tie_degenerate;
  out["lattice_repr"] = std::move(repr);
  out["k"] = graph.k;
  out["per_node_radius"] = graph.per_node_radius;
  OrderedJson edges = OrderedJson::array();
  for (const auto& e : graph.edges) {
    OrderedJson edge;
    edge["src"] = e.src;
    edge["dst"] = e.dst;
    edge["image"] = to_json(e.image);
    edge["dist"] = e.dist;
    if (e.angles) edge["angles"] = OrderedJson::array({(*e.angles)[0], (*e.angles)[1], (*e.angles)[2]});
    if (e.vec) edge["vec"] = to_json(*e.vec);
    if (e.slot != 0) edge["slot"] = e.slot;
    edges.push_back(std::move(edge));
  }
  out["edges"] = std::move(edges);
  return dump(out);
}

CrystalGraph parse_graph_json(std::string_view text) {
  try {
    const Json doc = parse_json_text(text);
    if (!doc.is_object()) schema("top level must be an object");
    CrystalGraph graph;
    const Json& kind = require(doc, "kind");
    if (!kind.is_string()) schema("kind must be a string");
    if (kind == "invariant") {
      graph.kind = GraphKind::kInvariant;
    } else if (kind == "equivariant") {
      graph.kind = GraphKind::kEquivariant;
    } else {
      schema("kind must be 'invariant' or 'equivariant'");
    }

    const Json& z_json = require(doc, "atomic_numbers");
    if (!z_json.is_array() || z_json.empty()) schema("atomic_numbers must be a non-empty array");
    for (const auto& z : z_json) {
      const long long value = integer(z, "atomic_numbers entry");
      if (value < 1 || value > kMaxAtomicNumber) schema("atomic number outside 1..118");
      graph.atomic_numbers.push_back(static_cast<int>(value));
    }
    const auto n = static_cast<long long>(graph.atomic_numbers.size());

    const Json& repr = require(doc, "lattice_repr");
    graph.lattice_repr.e = {vec3(require(repr, "e1"), "e1"), vec3(require(repr, "e2"), "e2"),
                            vec3(require(repr, "e3"), "e3")};
    if (repr.contains("c1") && repr.contains("c2") && repr.contains("c3")) {
      graph.lattice_repr.coeff = {image3(repr["c1"], "c1"), image3(repr["c2"], "c2"), image3(repr["c3"], "c3")};
    }
    if (const auto it = repr.find("tie_degenerate"); it != repr.end()) {
      if (!it->is_boolean()) schema("tie_degenerate must be a boolean");
      graph.lattice_repr.tie_degenerate = it->get<bool>();
    }
    if (const auto it = doc.find("k"); it != doc.end()) {
      const long long k = integer(*it, "k");
      if (k < 0 || k > 1000000) schema("k out of range");
      graph.k = static_cast<int>(k);
    }
    if (const auto it = doc.find("per_node_radius"); it != doc.end()) {
      if (!it->is_array()) schema("per_node_radius must be an array");
      for (const auto& r : *it) graph.per_node_radius.push_back(number(r, "per_node_radius entry"));
    }

    const Json& edges = require(doc, "edges");
    if (!edges.is_array()) schema("edges must be an array");
    graph.edges.reserve(edges.size());
    for (const auto& e : edges) {
      if (!e.is_object()) schema("edge must be an object");
      Edge edge;
      const long long src = integer(require(e, "src"), "src");
      const long long dst = integer(require(e, "dst"), "dst");
      if (src < 0 || src >= n || dst < 0 || dst >= n) schema("edge endpoint out of range");
      edge.src = static_cast<int>(src);
      edge.dst = static_cast<int>(dst);
      edge.image = image3(require(e, "image"), "image");
      edge.dist = number(require(e, "dist"), "dist");
      if (!(edge.dist > 0.0)) schema("edge distance must be positive");
      if (const auto it = e.find("slot"); it != e.end()) {
        const long long slot = integer(*it, "slot");
        if (slot < 0 || slot > 3) schema("slot must be 0..3");
        if (slot != 0 && src != dst) schema("lattice self-edges must have src == dst");
        edge.slot = static_cast<int>(slot);
      }
      const bool has_angles = e.contains("angles");
      const bool has_vec = e.contains("vec");
      if (graph.kind == GraphKind::kInvariant) {
        if (has_vec) throw Error(ErrorCode::kKindMismatch, "invariant graph edge carries 'vec'");
        if (!has_angles) schema("invariant edge lacks 'angles'");
        const Vec3 a = vec3(e["angles"], "angles");
        edge.angles = std::array<double, 3>{a[0], a[1], a[2]};
      } else {
        if (has_angles) throw Error(ErrorCode::kKindMismatch, "equivariant graph edge carries 'angles'");
        if (!has_vec) schema("equivariant edge lacks 'vec'");
        edge.vec = vec3(e["vec"], "vec");
      }
      graph.edges.push_back(std::move(edge));
    }
    return graph;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    schema(e.what());
  }
}

StructureDocument parse_structure(std::string_view text) {
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '{') return parse_crystal_json(text);
    break;
  }
  return parse_poscar(text);
}

std::string write_structure(const StructureDocument& doc, StructureFormat format) {
  return format == StructureFormat::kJson ? write_crystal_json(doc) : write_poscar(doc);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

StructureDocument read_structure_file(const std::filesystem::path& path) {
  StructureDocument doc = parse_structure(read_text_file(path));
  doc.source_path = path.string();
  return doc;
}

}  // namespace comformer
