// comformer: graph construction, reconstruction checks, invariance fuzzing
// and frozen-weight model evaluation from the command line.
#include "comformer/error.hpp"
#include "comformer/fixtures.hpp"
#include "comformer/graph.hpp"
#include "comformer/model/comformer.hpp"
#include "comformer/parallel.hpp"
#include "comformer/reconstruct.hpp"
#include "comformer/structure_io.hpp"
#include "comformer/symmetry.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>

namespace fs = std::filesystem;
using namespace comformer;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitDomain = 2;

struct Global {
  std::uint64_t seed = 0;
  int k = 12;
  double tol = 1e-6;
  std::string format = "json";
  std::string out;
};

bool is_domain_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDisconnected:
    case ErrorCode::kInconsistentPlacement:
    case ErrorCode::kLeftHandedSolution:
    case ErrorCode::kSingularBasis:
    case ErrorCode::kMissingSelfEdges:
      return true;
    default:
      return false;
  }
}

int report_error(const Error& e, const std::string& where = {}) {
  std::cerr << "error";
  if (!where.empty()) std::cerr << " (" << where << ")";
  std::cerr << ": " << e.what() << "\n";
  if (e.code() == ErrorCode::kDisconnected) std::cerr << "hint: increase k so every atom reaches the rest of the cell\n";
  return is_domain_error(e.code()) ? kExitDomain : kExitInput;
}

GraphKind parse_kind(const std::string& s) { return s == "equivariant" ? GraphKind::kEquivariant : GraphKind::kInvariant; }

/// Files given directly plus the regular files of any directory, sorted.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> dir;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file()) dir.push_back(entry.path());
      }
      std::sort(dir.begin(), dir.end());
      files.insert(files.end(), dir.begin(), dir.end());
    } else {
      files.push_back(p);
    }
  }
  return files;
}

void emit(const Global& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(g.out, text);
  }
}

model::ModelConfig load_config(const std::string& path, const std::string& variant) {
  model::ModelConfig config;
  if (!path.empty()) config = model::parse_model_config(read_text_file(path));
  if (variant == "icomformer") config.variant = model::Variant::kIComFormer;
  if (variant == "ecomformer") config.variant = model::Variant::kEComFormer;
  return config;
}

model::Parameters load_params(const std::string& path, const model::ModelConfig& config) {
  model::Parameters params =
      path.empty() ? model::init_parameters(config) : model::parse_parameters_json(read_text_file(path));
  model::check_parameters(params, config);
  return params;
}

// Per-file outcome of a batch command, filled concurrently, emitted in order.
struct Outcome {
  std::string text;
  std::optional<Error> error;
};

int first_failure_code(const std::vector<Outcome>& outcomes, const std::vector<fs::path>& files) {
  int code = kExitOk;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].error) code = std::max(code, report_error(*outcomes[i].error, files[i].string()));
  }
  return code;
}

int cmd_graph(const Global& g, const std::vector<std::string>& inputs, const std::string& kind_name) {
  const auto files = expand_inputs(inputs);
  const GraphKind kind = parse_kind(kind_name);
  if (files.size() > 1 && g.out.empty()) {
    std::cerr << "error: several inputs need --out DIR\n";
    return kExitInput;
  }
  std::vector<Outcome> outcomes(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    try {
      const auto doc = read_structure_file(files[i]);
      outcomes[i].text = write_graph_json(build_graph(doc.crystal, g.k, kind));
    } catch (const Error& e) {
      outcomes[i].error = e;
    }
  });
  const int code = first_failure_code(outcomes, files);
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (outcomes[i].error) continue;
    if (g.out.empty()) {
      std::cout << outcomes[i].text;
    } else if (files.size() == 1 && !fs::is_directory(g.out)) {
      write_text_file(g.out, outcomes[i].text);
    } else {
      fs::create_directories(g.out);
      write_text_file(fs::path(g.out) / (files[i].stem().string() + ".graph.json"), outcomes[i].text);
    }
  }
  std::cerr << "graphs: " << std::count_if(outcomes.begin(), outcomes.end(), [](const Outcome& o) { return !o.error; })
            << " of " << files.size() << " written\n";
  return code;
}

Json report_json(const ReconstructionReport& r) {
  return Json{{"rmsd", r.rmsd}, {"max_pointwise", r.max_pointwise}, {"lattice_mismatch", r.lattice_mismatch},
              {"success", r.success}};
}

int cmd_verify(const Global& g, const std::vector<std::string>& inputs, const std::string& kind_name,
               const std::string& graph_file) {
  const GraphKind kind = parse_kind(kind_name);
  // A stored graph checked against one reference structure.
  if (!graph_file.empty()) {
    if (inputs.size() != 1) {
      std::cerr << "error: --graph needs exactly one reference structure\n";
      return kExitInput;
    }
    try {
      const auto doc = read_structure_file(inputs.front());
      const CrystalGraph graph = parse_graph_json(read_text_file(graph_file));
      const auto report = match_structures(doc.crystal, reconstruct(graph), g.tol);
      Json out{{"graph", graph_file}, {"structure", inputs.front()}, {"report", report_json(report)}};
      emit(g, out.dump(2) + "\n");
      std::cerr << "rmsd " << report.rmsd << (report.success ? " (pass)\n" : " (FAIL)\n");
      return report.success ? kExitOk : kExitDomain;
    } catch (const Error& e) {
      return report_error(e, graph_file);
    }
  }

  const auto files = expand_inputs(inputs);
  std::vector<std::optional<ReconstructionReport>> reports(files.size());
  std::vector<Outcome> outcomes(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    try {
      const auto doc = read_structure_file(files[i]);
      // Round-trips through the on-disk format so serialization is covered.
      const CrystalGraph graph = parse_graph_json(write_graph_json(build_graph(doc.crystal, g.k, kind)));
      reports[i] = match_structures(doc.crystal, reconstruct(graph), g.tol);
    } catch (const Error& e) {
      outcomes[i].error = e;
    }
  });
  int code = first_failure_code(outcomes, files);
  Json structures = Json::array();
  double sum = 0.0;
  double worst = 0.0;
  double point_sum = 0.0;
  double point_worst = 0.0;
  int passed = 0;
  int reported = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    Json entry{{"file", files[i].string()}};
    if (reports[i]) {
      entry["report"] = report_json(*reports[i]);
      sum += reports[i]->rmsd;
      worst = std::max(worst, reports[i]->rmsd);
      point_sum += reports[i]->max_pointwise;
      ++reported;
      point_worst = std::max(point_worst, reports[i]->max_pointwise);
      passed += reports[i]->success ? 1 : 0;
    } else {
      entry["error"] = std::string(error_code_name(outcomes[i].error->code()));
    }
    structures.push_back(std::move(entry));
  }
  const auto total = static_cast<int>(files.size());
  // Means cover the structures that produced a report.
  const double mean = reported == 0 ? 0.0 : sum / reported;
  const double point_mean = reported == 0 ? 0.0 : point_sum / reported;
  Json out{{"k", g.k},
           {"kind", std::string(graph_kind_name(kind))},
           {"tol", g.tol},
           {"structures", std::move(structures)},
           {"summary", {{"count", total}, {"passed", passed}, {"mean_rmsd", mean}, {"max_rmsd", worst},
                        {"mean_max_pointwise", point_mean}, {"max_max_pointwise", point_worst}}}};
  emit(g, out.dump(2) + "\n");
  std::cerr << "verify: " << passed << "/" << total << " passed, mean rmsd " << mean << "\n";
  if (passed != total && code == kExitOk) code = kExitDomain;
  return code;
}

int cmd_invariance(const Global& g, const std::string& input, int trials, bool include_mirror, double fuzz_tol) {
  try {
    const auto doc = read_structure_file(input);
    FuzzOptions opts;
    opts.tol = fuzz_tol;
    opts.include_mirror = include_mirror;
    const FuzzReport report = fuzz_invariance(doc.crystal, g.k, trials, g.seed, opts);
    Json kinds = Json::array();
    for (const auto& s : report.per_kind) {
      kinds.push_back({{"kind", std::string(transform_kind_name(s.kind))},
                       {"passed", s.passed},
                       {"failed", s.failed},
                       {"worst_deviation", s.worst_deviation}});
    }
    const auto worst = std::isfinite(report.worst_deviation) ? Json(report.worst_deviation) : Json(nullptr);
    Json out{{"file", input},     {"k", g.k},          {"seed", g.seed},          {"trials", trials},
             {"tol", fuzz_tol},   {"passed", report.passed}, {"failed", report.failed}, {"worst_deviation", worst},
             {"per_kind", kinds}, {"failures", report.failures}};
    emit(g, out.dump(2) + "\n");
    std::cerr << "invariance: " << report.failed << " failures in " << report.passed + report.failed << " trials\n";
    return report.failed == 0 ? kExitOk : kExitDomain;
  } catch (const Error& e) {
    return report_error(e, input);
  }
}

int cmd_model(const Global& g, const std::vector<std::string>& inputs, const std::string& config_path,
              const std::string& params_path, const std::string& variant, bool predict) {
  model::ModelConfig config;
  model::Parameters params;
  try {
    config = load_config(config_path, variant);
    params = load_params(params_path, config);
  } catch (const Error& e) {
    return report_error(e, params_path.empty() ? config_path : params_path);
  }
  const auto files = expand_inputs(inputs);
  std::vector<model::ForwardResult> results(files.size());
  std::vector<Outcome> outcomes(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    try {
      const auto doc = read_structure_file(files[i]);
      results[i] = model::forward(build_graph(doc.crystal, g.k, model::required_graph_kind(config)), config, params);
    } catch (const Error& e) {
      outcomes[i].error = e;
    }
  });
  const int code = first_failure_code(outcomes, files);
  std::ostringstream csv;
  csv.precision(17);
  csv << "file";
  if (predict) {
    csv << ",prediction";
  } else {
    for (int c = 0; c < config.hidden_dim; ++c) csv << ",f" << c;
  }
  csv << "\n";
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (outcomes[i].error) continue;
    csv << files[i].string();
    if (predict) {
      csv << "," << results[i].prediction;
    } else {
      for (double v : results[i].pooled) csv << "," << v;
    }
    csv << "\n";
  }
  emit(g, csv.str());
  return code;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

int cmd_bench(const Global& g, const std::string& n_range, const std::string& k_range, int repeats) {
  std::vector<int> ns;
  std::vector<int> ks;
  try {
    ns = parse_int_list(n_range);
    ks = k_range.empty() ? std::vector<int>{g.k} : parse_int_list(k_range);
  } catch (const std::exception&) {
    std::cerr << "error: --n-range and --k-range take comma-separated integers\n";
    return kExitInput;
  }
  model::ModelConfig config;
  config.seed = g.seed;
  const model::Parameters params = model::init_parameters(config);
  std::ostringstream csv;
  csv << "n,k,edges,graph_s,forward_s,total_s\n";
  try {
    for (int n : ns) {
      const Crystal crystal = generate({FixtureFamily::kTriclinic, n, g.seed});
      for (int k : ks) {
        double best_graph = std::numeric_limits<double>::infinity();
        double best_forward = std::numeric_limits<double>::infinity();
        std::size_t edges = 0;
        for (int r = 0; r < std::max(1, repeats); ++r) {
          const auto t0 = std::chrono::steady_clock::now();
          const CrystalGraph graph = build_graph(crystal, k, GraphKind::kEquivariant);
          const auto t1 = std::chrono::steady_clock::now();
          volatile double sink = model::predict(graph, config, params);
          (void)sink;
          const auto t2 = std::chrono::steady_clock::now();
          edges = graph.edges.size();
          best_graph = std::min(best_graph, std::chrono::duration<double>(t1 - t0).count());
          best_forward = std::min(best_forward, std::chrono::duration<double>(t2 - t1).count());
        }
        csv << n << "," << k << "," << edges << "," << best_graph << "," << best_forward << ","
            << best_graph + best_forward << "\n";
      }
    }
  } catch (const Error& e) {
    return report_error(e);
  }
  emit(g, csv.str());
  return kExitOk;
}

int cmd_fixtures(const Global& g, const std::string& family_name, int count, int n_atoms, double jitter, int factor,
                 const std::string& base_name) {
  const auto family = fixture_family_from_name(family_name);
  const auto base = fixture_family_from_name(base_name);
  if (!family || !base) {
    std::cerr << "error: unknown fixture family\n";
    return kExitInput;
  }
  if (g.out.empty()) {
    std::cerr << "error: fixtures needs --out DIR\n";
    return kExitInput;
  }
  const StructureFormat format = g.format == "poscar" ? StructureFormat::kPoscar : StructureFormat::kJson;
  const char* ext = format == StructureFormat::kPoscar ? ".vasp" : ".json";
  try {
    fs::create_directories(g.out);
    for (int i = 0; i < count; ++i) {
      FixtureSpec spec{*family, n_atoms, g.seed + static_cast<std::uint64_t>(i), jitter, *base, factor};
      StructureDocument doc{generate(spec), std::string(family_name) + " seed " + std::to_string(spec.seed), std::nullopt};
      char name[64];
      std::snprintf(name, sizeof name, "%s_%04d%s", family_name.c_str(), i, ext);
      write_text_file(fs::path(g.out) / name, write_structure(doc, format));
    }
  } catch (const Error& e) {
    return report_error(e);
  }
  std::cerr << "fixtures: wrote " << count << " " << family_name << " structures to " << g.out << "\n";
  return kExitOk;
}

int cmd_params(const Global& g, const std::string& config_path, const std::string& variant,
               const std::string& species_csv) {
  try {
    model::ModelConfig config = load_config(config_path, variant);
    if (config_path.empty()) config.seed = g.seed;
    model::Parameters params = model::init_parameters(config);
    if (!species_csv.empty()) model::load_species_table_csv(params, config, read_text_file(species_csv));
    emit(g, model::write_parameters_json(params));
  } catch (const Error& e) {
    return report_error(e);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ComFormer crystal graphs and models"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--k", g.k, "Neighbors per atom")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--tol", g.tol, "Tolerance (Angstrom)")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--format", g.format, "Structure format")->check(CLI::IsMember({"poscar", "json"}))->capture_default_str();
  app.add_option("--out", g.out, "Output file or directory");

  std::vector<std::string> inputs;
  std::string kind = "invariant";
  const auto kind_check = CLI::IsMember({"invariant", "equivariant"});

  auto* graph = app.add_subcommand("graph", "Build crystal graphs");
  graph->add_option("inputs", inputs, "Structure files or directories")->required();
  graph->add_option("--kind", kind)->check(kind_check)->capture_default_str();

  std::string graph_file;
  auto* verify = app.add_subcommand("verify", "Reconstruct structures from their graphs");
  verify->add_option("inputs", inputs, "Structure files or directories")->required();
  verify->add_option("--kind", kind)->check(kind_check)->capture_default_str();
  verify->add_option("--graph", graph_file, "Check this graph file against the single reference structure");

  std::string single;
  int trials = 100;
  bool include_mirror = false;
  double fuzz_tol = 1e-9;
  auto* invariance = app.add_subcommand("invariance", "Fuzz passive-symmetry invariance of the graph");
  invariance->add_option("input", single)->required();
  invariance->add_option("--trials", trials)->check(CLI::PositiveNumber)->capture_default_str();
  invariance->add_option("--fuzz-tol", fuzz_tol, "Feature tolerance")->capture_default_str();
  invariance->add_flag("--include-mirror", include_mirror, "Add reflections (negative control)");

  std::string config_path;
  std::string params_path;
  std::string variant;
  const auto variant_check = CLI::IsMember({"icomformer", "ecomformer"});
  auto* featurize = app.add_subcommand("featurize", "Pooled frozen-weight features as CSV");
  auto* predict = app.add_subcommand("predict", "Scalar predictions as CSV");
  for (auto* sub : {featurize, predict}) {
    sub->add_option("inputs", inputs)->required();
    sub->add_option("--model", config_path, "Model config JSON");
    sub->add_option("--params", params_path, "Parameter JSON")->check(CLI::ExistingFile);
    sub->add_option("--variant", variant)->check(variant_check);
  }

  std::string n_range = "64,128,256,512";
  std::string k_range;
  int repeats = 1;
  auto* bench = app.add_subcommand("bench", "Graph build + forward timings as CSV");
  bench->add_option("--n-range", n_range)->capture_default_str();
  bench->add_option("--k-range", k_range, "Comma-separated k values (default: --k)");
  bench->add_option("--repeats", repeats)->capture_default_str();

  std::string family = "triclinic";
  std::string base = "triclinic";
  int count = 10;
  int n_atoms = 4;
  double jitter = 0.0;
  int factor = 2;
  auto* fixtures = app.add_subcommand("fixtures", "Write synthetic structures");
  fixtures->add_option("--family", family)->capture_default_str();
  fixtures->add_option("--count", count)->check(CLI::PositiveNumber)->capture_default_str();
  fixtures->add_option("--n", n_atoms, "Atoms per cell")->capture_default_str();
  fixtures->add_option("--jitter", jitter)->capture_default_str();
  fixtures->add_option("--factor", factor, "Supercell factor")->capture_default_str();
  fixtures->add_option("--base", base, "Supercell base family")->capture_default_str();

  std::string species_csv;
  auto* params = app.add_subcommand("params", "Write seeded model parameters as JSON");
  params->add_option("--model", config_path, "Model config JSON");
  params->add_option("--variant", variant)->check(variant_check);
  params->add_option("--species-table", species_csv, "CSV rows Z,v1..v92");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*graph) return cmd_graph(g, inputs, kind);
    if (*verify) return cmd_verify(g, inputs, kind, graph_file);
    if (*invariance) return cmd_invariance(g, single, trials, include_mirror, fuzz_tol);
    if (*featurize) return cmd_model(g, inputs, config_path, params_path, variant, false);
    if (*predict) return cmd_model(g, inputs, config_path, params_path, variant, true);
    if (*bench) return cmd_bench(g, n_range, k_range, repeats);
    if (*fixtures) return cmd_fixtures(g, family, count, n_atoms, jitter, factor, base);
    if (*params) return cmd_params(g, config_path, variant, species_csv);
  } catch (const Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
