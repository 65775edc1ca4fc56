#include "cpd/output.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace cpd {
namespace {

// Shortest representation that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw OutputError("output: cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

double von_mises(const Sym3& stress) {
  const Sym3 dev = stress.deviator();
  return std::sqrt(1.5) * dev.norm();
}

std::string report_csv_header() {
  return "step,time_s,load_scale,newton_iters,def_assembly_s,def_solve_s,diff_iters,"
         "pcg_total,diff_assembly_s,diff_solve_s,violation_pct,min_c,max_c,"
         "plastic_zone_pct,uA_x,uA_y,uB_x,uB_y";
}

void write_report_csv(const std::filesystem::path& path, const RunReport& report) {
  auto out = open_out(path);
  out << report_csv_header() << '\n';
  for (const auto& r : report.rows) {
    out << r.step << ',' << fmt(r.time) << ',' << fmt(r.load_scale) << ','
        << r.newton_iterations << ',' << fmt(r.def_assembly_s) << ','
        << fmt(r.def_solve_s) << ',' << r.diffusion_iterations << ',' << r.pcg_total
        << ',' << fmt(r.diff_assembly_s) << ',' << fmt(r.diff_solve_s) << ','
        << fmt(r.violation_pct) << ',' << fmt(r.min_c) << ',' << fmt(r.max_c) << ','
        << fmt(r.plastic_zone_pct) << ',' << fmt(r.probe_a[0]) << ','
        << fmt(r.probe_a[1]) << ',' << fmt(r.probe_b[0]) << ',' << fmt(r.probe_b[1])
        << '\n';
  }
  if (!out) throw OutputError("output: write failed for '" + path.string() + "'");
}

void write_vtk_snapshot(const std::filesystem::path& path, const Mesh& mesh,
                        const CoupledState& snap) {
  const std::size_t n = mesh.nodes.size(), m = mesh.elements.size();
  if (snap.displacement.values.size() != 2 * n ||
      snap.concentration.values.size() != n || snap.states.size() != m)
    throw OutputError("output: snapshot does not match the mesh");
  auto out = open_out(path);
  out << "# vtk DataFile Version 3.0\n"
      << "coupled elastoplasticity-diffusion step " << snap.step << "\n"
      << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n << " double\n";
  for (const auto& p : mesh.nodes) out << fmt(p[0]) << ' ' << fmt(p[1]) << " 0\n";
  out << "CELLS " << m << ' ' << 4 * m << '\n';
  for (const auto& e : mesh.elements)
    out << "3 " << e[0] << ' ' << e[1] << ' ' << e[2] << '\n';
  out << "CELL_TYPES " << m << '\n';
  for (std::size_t e = 0; e < m; ++e) out << "5\n";

  out << "POINT_DATA " << n << '\n';
  out << "VECTORS displacement double\n";
  for (std::size_t i = 0; i < n; ++i)
    out << fmt(snap.displacement.values[2 * i]) << ' '
        << fmt(snap.displacement.values[2 * i + 1]) << " 0\n";
  out << "SCALARS concentration double 1\nLOOKUP_TABLE default\n";
  for (std::size_t i = 0; i < n; ++i) out << fmt(snap.concentration.values[i]) << '\n';

  out << "CELL_DATA " << m << '\n';
  out << "SCALARS von_mises double 1\nLOOKUP_TABLE default\n";
  for (const auto& st : snap.states) out << fmt(von_mises(st.stress)) << '\n';
  out << "SCALARS kappa double 1\nLOOKUP_TABLE default\n";
  for (const auto& st : snap.states) out << fmt(st.kappa) << '\n';
  out << "SCALARS yielded int 1\nLOOKUP_TABLE default\n";
  for (const auto& st : snap.states) out << (st.kappa > 0.0 ? 1 : 0) << '\n';
  if (!out) throw OutputError("output: write failed for '" + path.string() + "'");
}

void write_path_csv(const std::filesystem::path& path, const Mesh& mesh,
                    const NodalField& field, const std::string& path_set,
                    int samples) {
  const auto& nodes = mesh.node_set(path_set);
  if (nodes.size() < 2)
    throw OutputError("output: path set '" + path_set + "' needs at least two nodes");
  std::vector<std::array<double, 2>> polyline;
  polyline.reserve(nodes.size());
  for (int n : nodes) polyline.push_back(mesh.nodes[n]);
  const auto profile = sample_along_path(mesh, field, polyline, samples);
  auto out = open_out(path);
  out << "arclength,c\n";
  for (const auto& s : profile) out << fmt(s.arclength) << ',' << fmt(s.value) << '\n';
  if (!out) throw OutputError("output: write failed for '" + path.string() + "'");
}

void write_run_json(const std::filesystem::path& path, const RunConfig& config) {
  auto out = open_out(path);
  out << config_to_json(config);
  if (!out) throw OutputError("output: write failed for '" + path.string() + "'");
}

std::vector<std::filesystem::path> emit_outputs(const RunConfig& config,
                                                const Mesh& mesh, const CoupledRun& run,
                                                const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec)
    throw OutputError("output: cannot create directory '" + directory.string() +
                      "': " + ec.message());
  std::vector<std::filesystem::path> written;

  const auto report = directory / "report.csv";
  write_report_csv(report, run.report);
  written.push_back(report);

  const auto meta = directory / "run.json";
  write_run_json(meta, config);
  written.push_back(meta);

  if (config.output.write_fields) {
    for (const auto& snap : run.history) {
      char name[32];
      std::snprintf(name, sizeof name, "fields_step%03d.vtk", snap.step);
      const auto file = directory / name;
      write_vtk_snapshot(file, mesh, snap);
      written.push_back(file);
    }
  }

  if (!config.output.path_set.empty()) {
    if (config.output.path_steps == PathSteps::All) {
      for (const auto& snap : run.history) {
        char name[32];
        std::snprintf(name, sizeof name, "path_C_step%03d.csv", snap.step);
        const auto file = directory / name;
        write_path_csv(file, mesh, snap.concentration, config.output.path_set,
                       config.output.path_samples);
        written.push_back(file);
      }
    }
    const auto file = directory / "path_C.csv";
    write_path_csv(file, mesh, run.final_state.concentration, config.output.path_set,
                   config.output.path_samples);
    written.push_back(file);
  }
  return written;
}

}  // namespace cpd
