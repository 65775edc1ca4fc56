// Run artifacts: the per-step report table (CSV), legacy-ASCII unstructured
// grid snapshots of the fields, concentration profiles along a node-set
// path, and a JSON echo of the resolved configuration.
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpd/config.hpp"
#include "cpd/coupling.hpp"

namespace cpd {

class OutputError : public std::runtime_error {
 public:
  explicit OutputError(const std::string& what) : std::runtime_error(what) {}
};

// Scaled deviatoric norm sqrt(3/2)||dev sigma||; uniaxial stress maps to its
// own magnitude.
double von_mises(const Sym3& stress);

// The fixed report column order; first line of every report.csv.
std::string report_csv_header();

void write_report_csv(const std::filesystem::path& path, const RunReport& report);

// Legacy ASCII unstructured grid: displacement and concentration as point
// data; von Mises stress, accumulated plastic strain, and a yielded flag as
// cell data.
void write_vtk_snapshot(const std::filesystem::path& path, const Mesh& mesh,
                        const CoupledState& snapshot);

// Uniformly spaced (arclength, value) samples along the polyline through the
// nodes of `path_set`, in the set's stored order.
void write_path_csv(const std::filesystem::path& path, const Mesh& mesh,
                    const NodalField& field, const std::string& path_set,
                    int samples);

void write_run_json(const std::filesystem::path& path, const RunConfig& config);

// Writes everything a run produces into `directory` (created if needed):
// report.csv, run.json, fields_stepNNN.vtk per snapshot, and path profiles
// per the output spec. Returns the written file paths.
std::vector<std::filesystem::path> emit_outputs(const RunConfig& config,
                                                const Mesh& mesh,
                                                const CoupledRun& run,
                                                const std::filesystem::path& directory);

}  // namespace cpd
