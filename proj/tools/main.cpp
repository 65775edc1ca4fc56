// Command-line front end: run a configured coupled simulation, emit presets,
// validate configurations, and compare solution paths/models side by side.
#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cpd/config.hpp"
#include "cpd/output.hpp"
#include "cpd/parallel.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;  // empty = use the config's directory
  int threads = 0;      // 0 = use the config's count
};

cpd::RunConfig load_and_override(const CommonArgs& args) {
  cpd::RunConfig cfg = cpd::load_config(args.config_path);
  if (!args.out_dir.empty()) cfg.output.directory = args.out_dir;
  if (args.threads > 0) cfg.threads = args.threads;
  return cfg;
}

void print_parameter_table(const cpd::RunConfig& cfg, const cpd::Mesh& mesh) {
  const auto& m = cfg.material;
  std::cout << "mesh: " << mesh.node_count() << " nodes, " << mesh.element_count()
            << " elements\n"
            << "lambda0 = " << m.lambda0 << "  mu0 = " << m.mu0 << '\n'
            << "E = " << m.youngs() << "  nu = " << m.poisson() << '\n'
            << "lambda1 = " << m.lambda1 << "  mu1 = " << m.mu1
            << "  c_ref = " << m.c_ref << '\n'
            << "sigma0 = " << m.sigma0 << "  H = " << m.H << "  kappa0 = " << m.kappa0()
            << '\n'
            << "n_w = " << m.n_w << "  zeta = " << m.zeta << '\n'
            << "d = (" << m.d1 << ", " << m.d2 << ")  theta = " << m.theta << '\n'
            << "eta = (" << m.eta_T << ", " << m.eta_S << ")  E_ref = " << m.E_ref
            << "  phi = (" << m.phi_T << ", " << m.phi_S << ")\n"
            << "m_source = " << m.m_source << '\n'
            << "bounds = [" << cfg.c_min << ", " << cfg.c_max << "]\n"
            << "steps = " << cfg.schedule.steps.size() << "  peak scale = "
            << std::max_element(cfg.schedule.steps.begin(), cfg.schedule.steps.end(),
                                [](const auto& a, const auto& b) {
                                  return a.scale < b.scale;
                                })
                   ->scale
            << '\n';
}

// Resolves every referenced node set and edge tag against the mesh.
void resolve_references(const cpd::RunConfig& cfg, const cpd::Mesh& mesh) {
  for (const auto& d : cfg.dirichlet_u) mesh.node_set(d.node_set);
  for (const auto& d : cfg.dirichlet_c) mesh.node_set(d.node_set);
  mesh.node_set(cfg.probe_a);
  mesh.node_set(cfg.probe_b);
  if (!cfg.output.path_set.empty()) mesh.node_set(cfg.output.path_set);
  auto has_tag = [&](const std::string& tag) {
    for (const auto& e : mesh.boundary_edges)
      if (e.tag == tag) return true;
    return false;
  };
  for (const auto& t : cfg.tractions)
    if (!has_tag(t.edge_tag))
      throw cpd::ConfigError("config: no boundary edges tagged '" + t.edge_tag + "'");
  for (const auto& f : cfg.fluxes)
    if (!has_tag(f.edge_tag))
      throw cpd::ConfigError("config: no boundary edges tagged '" + f.edge_tag + "'");
}

void print_run_summary(const cpd::CoupledRun& run,
                       const std::vector<std::filesystem::path>& files) {
  const auto& rows = run.report.rows;
  if (!rows.empty()) {
    const auto peak = std::max_element(
        rows.begin(), rows.end(),
        [](const auto& a, const auto& b) { return a.load_scale < b.load_scale; });
    std::cout << "steps: " << rows.size() << "  peak step " << peak->step
              << ": plastic zone " << peak->plastic_zone_pct << "%, c in ["
              << peak->min_c << ", " << peak->max_c << "], violations "
              << peak->violation_pct << "%\n";
  }
  for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
}

int run_one(const cpd::RunConfig& cfg) {
  cpd::Mesh mesh;
  try {
    mesh = cpd::build_mesh(cfg.mesh);
    resolve_references(cfg, mesh);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitConfig;
  }
  cpd::set_thread_count(cfg.threads);
  try {
    const cpd::CoupledRun run = cpd::run_coupled(cpd::make_problem(cfg, mesh));
    const auto files = cpd::emit_outputs(cfg, mesh, run, cfg.output.directory);
    print_run_summary(run, files);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitSolver;
  }
  return kExitOk;
}

int run_compare(const CommonArgs& args, const std::string& paths_csv,
                const std::string& models_csv) {
  cpd::RunConfig base;
  std::vector<cpd::DiffusionPath> paths;
  std::vector<cpd::ModelVariant> models;
  try {
    base = load_and_override(args);
    std::stringstream ps(paths_csv);
    for (std::string tok; std::getline(ps, tok, ',');) {
      if (tok == "cg")
        paths.push_back(cpd::DiffusionPath::Cg);
      else if (tok == "nn")
        paths.push_back(cpd::DiffusionPath::Nn);
      else
        throw cpd::ConfigError("config: unknown path '" + tok + "' (expected cg or nn)");
    }
    if (paths.empty()) throw cpd::ConfigError("config: --paths must name cg and/or nn");
    if (models_csv.empty()) {
      models.push_back(base.model);
    } else {
      std::stringstream ms(models_csv);
      for (std::string tok; std::getline(ms, tok, ',');) {
        if (tok == "I")
          models.push_back(cpd::ModelVariant::ModelI);
        else if (tok == "II")
          models.push_back(cpd::ModelVariant::ModelII);
        else
          throw cpd::ConfigError("config: unknown model '" + tok +
                                 "' (expected I or II)");
      }
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitConfig;
  }

  cpd::Mesh mesh;
  try {
    mesh = cpd::build_mesh(base.mesh);
    resolve_references(base, mesh);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitConfig;
  }
  cpd::set_thread_count(base.threads);

  struct Labeled {
    std::string label;
    cpd::CoupledRun run;
  };
  std::vector<Labeled> runs;
  const std::filesystem::path root = base.output.directory;
  for (const auto model : models) {
    for (const auto path : paths) {
      cpd::RunConfig cfg = base;
      cfg.model = model;
      cfg.path = path;
      const std::string label =
          std::string(model == cpd::ModelVariant::ModelI ? "I" : "II") + "_" +
          (path == cpd::DiffusionPath::Nn ? "nn" : "cg");
      cfg.output.directory = (root / label).string();
      std::cout << "running " << label << "\n";
      try {
        const cpd::CoupledRun run = cpd::run_coupled(cpd::make_problem(cfg, mesh));
        cpd::emit_outputs(cfg, mesh, run, cfg.output.directory);
        runs.push_back({label, run});
      } catch (const std::exception& err) {
        std::cerr << "error (" << label << "): " << err.what() << '\n';
        return kExitSolver;
      }
    }
  }

  try {
    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    const auto merged = root / "compare.csv";
    std::ofstream out(merged);
    if (!out) throw cpd::OutputError("output: cannot write '" + merged.string() + "'");
    out << "step,time_s,load_scale";
    for (const auto& r : runs)
      out << ',' << r.label << "_diff_iters," << r.label << "_pcg_total," << r.label
          << "_violation_pct," << r.label << "_min_c," << r.label << "_max_c";
    out << '\n';
    const std::size_t n_rows = runs.front().run.report.rows.size();
    for (std::size_t i = 0; i < n_rows; ++i) {
      const auto& first = runs.front().run.report.rows[i];
      out << first.step << ',' << first.time << ',' << first.load_scale;
      for (const auto& r : runs) {
        const auto& row = r.run.report.rows[i];
        out << ',' << row.diffusion_iterations << ',' << row.pcg_total << ','
            << row.violation_pct << ',' << row.min_c << ',' << row.max_c;
      }
      out << '\n';
    }
    std::cout << "wrote " << merged.string() << '\n';
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitSolver;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupled elastoplasticity-diffusion benchmark"};
  app.require_subcommand(1);

  CommonArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "execute a configured simulation");
  run_cmd->add_option("config", run_args.config_path, "JSON configuration file")
      ->required();
  run_cmd->add_option("--out", run_args.out_dir, "output directory override");
  run_cmd->add_option("--threads", run_args.threads, "worker thread count override");

  std::string preset_name;
  std::string preset_model = "I";
  auto* preset_cmd =
      app.add_subcommand("preset", "print a benchmark configuration to stdout");
  preset_cmd
      ->add_option("name", preset_name, "caseI, caseII_iso, caseII_low, caseII_high")
      ->required();
  preset_cmd->add_option("--model", preset_model, "degradation model (I or II)");

  std::string validate_path;
  auto* validate_cmd =
      app.add_subcommand("validate", "parse a configuration and resolve references");
  validate_cmd->add_option("config", validate_path, "JSON configuration file")
      ->required();

  CommonArgs cmp_args;
  std::string cmp_paths = "cg,nn";
  std::string cmp_models;
  auto* compare_cmd =
      app.add_subcommand("compare", "run path/model variants and merge the reports");
  compare_cmd->add_option("config", cmp_args.config_path, "JSON configuration file")
      ->required();
  compare_cmd->add_option("--paths", cmp_paths, "comma list of solution paths (cg,nn)");
  compare_cmd->add_option("--models", cmp_models, "comma list of models (I,II)");
  compare_cmd->add_option("--out", cmp_args.out_dir, "output directory override");
  compare_cmd->add_option("--threads", cmp_args.threads, "worker thread count override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (run_cmd->parsed()) {
    try {
      return run_one(load_and_override(run_args));
    } catch (const std::exception& err) {
      std::cerr << "error: " << err.what() << '\n';
      return kExitConfig;
    }
  }
  if (preset_cmd->parsed()) {
    try {
      cpd::ModelVariant model;
      if (preset_model == "I")
        model = cpd::ModelVariant::ModelI;
      else if (preset_model == "II")
        model = cpd::ModelVariant::ModelII;
      else
        throw cpd::ConfigError("config: --model expects I or II");
      std::cout << cpd::config_to_json(cpd::preset(preset_name, model));
      return kExitOk;
    } catch (const std::exception& err) {
      std::cerr << "error: " << err.what() << '\n';
      return kExitConfig;
    }
  }
  if (validate_cmd->parsed()) {
    try {
      const cpd::RunConfig cfg = cpd::load_config(validate_path);
      const cpd::Mesh mesh = cpd::build_mesh(cfg.mesh);
      resolve_references(cfg, mesh);
      print_parameter_table(cfg, mesh);
      std::cout << "ok\n";
      return kExitOk;
    } catch (const std::exception& err) {
      std::cerr << "error: " << err.what() << '\n';
      return kExitConfig;
    }
  }
  return run_compare(cmp_args, cmp_paths, cmp_models);
}
