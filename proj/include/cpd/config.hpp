// Run configuration: JSON ingestion with strict validation, benchmark
// presets, and the conversion into a runnable coupled problem. The resolved
// configuration serializes back to JSON losslessly, so an echoed file
// reproduces the identical run.
#pragma once

#include <array>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpd/coupling.hpp"

namespace cpd {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct MeshSpec {
  bool generated = true;
  std::string file;  // used when generated == false
  double length = 0.36;
  double height = 0.2;
  double hole_radius = 0.05;
  int refinement = 5;
};

struct DirichletUSpec {
  std::string node_set;
  int component = 0;  // 0 = x, 1 = y
  double value = 0.0;
  bool scale_with_load = false;
};

struct TractionSpec {
  std::string edge_tag;
  std::array<double, 2> traction{0.0, 0.0};  // peak value; multiplied by scale
};

struct DirichletCSpec {
  std::string node_set;
  double value = 0.0;
};

struct FluxSpec {
  std::string edge_tag;
  double flux = 0.0;
};

enum class PathSteps { Final, All };

struct OutputSpec {
  std::string directory = "out";
  int snapshot_every = 1;  // 0 = no field snapshots
  bool write_fields = true;
  std::string path_set = "path_C";  // empty = no path profile output
  int path_samples = 200;
  PathSteps path_steps = PathSteps::Final;
};

struct RunConfig {
  MeshSpec mesh;
  MaterialParams material;
  ModelVariant model = ModelVariant::ModelI;
  CouplingMode mode = CouplingMode::TwoWay;
  DiffusionPath path = DiffusionPath::Nn;
  double c_min = 0.0;
  double c_max = std::numeric_limits<double>::infinity();
  LoadSchedule schedule;  // always resolved (non-empty) after parsing
  std::vector<DirichletUSpec> dirichlet_u;
  std::vector<TractionSpec> tractions;
  std::vector<DirichletCSpec> dirichlet_c;
  std::vector<FluxSpec> fluxes;
  bool zero_initial_concentration = false;
  bool warm_start_diffusion = false;
  DeformationOpts newton;
  std::string probe_a = "point_A";
  std::string probe_b = "point_B";
  OutputSpec output;
  int threads = 1;
};

// Parses and validates a JSON document. Unknown keys, malformed values, and
// violated parameter invariants all throw ConfigError with a key path.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

// Serializes the fully resolved configuration; parse_config round-trips it
// to an equivalent RunConfig (doubles are preserved exactly).
std::string config_to_json(const RunConfig& config);

// Benchmark presets: caseI, caseII_iso, caseII_low, caseII_high. The model
// picks the matching anisotropy multipliers phi_T/phi_S; Model II presets
// bound the concentration by the largest Dirichlet datum.
RunConfig preset(const std::string& name, ModelVariant model = ModelVariant::ModelI);

// Builds the mesh a config describes (generated plate or mesh file).
Mesh build_mesh(const MeshSpec& spec);

// Binds a config to a mesh, materializing the BC functions. The mesh must
// outlive the returned problem.
CoupledProblem make_problem(const RunConfig& config, const Mesh& mesh);

}  // namespace cpd
