// Triangle mesh types, plain-text ingestion, the plate-with-hole generator,
// and P1 field sampling.
//
// Mesh file grammar (whitespace-delimited, '#' starts a comment):
//   nodes <n>        followed by n lines "x y"
//   elements <m>     followed by m lines "i j k"   (0-based node indices)
//   edges <p>        followed by p lines "a b tag"
#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpd {

class MeshError : public std::runtime_error {
 public:
  explicit MeshError(const std::string& what) : std::runtime_error(what) {}
};

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  std::string tag;
};

// Immutable after construction; safe to share read-only across threads.
struct Mesh {
  std::vector<std::array<double, 2>> nodes;
  std::vector<std::array<int, 3>> elements;  // counter-clockwise
  std::vector<BoundaryEdge> boundary_edges;
  std::map<std::string, std::vector<int>> node_sets;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int element_count() const { return static_cast<int>(elements.size()); }
  double element_area(int e) const;
  std::array<double, 2> centroid(int e) const;
  const std::vector<int>& node_set(const std::string& name) const;
};

// Geometry of one 3-node triangle at its single centroid quadrature point:
// area and the constant shape-function gradients dN[i] = (dNi/dx, dNi/dy).
struct ElementGeometry {
  double area = 0.0;
  std::array<std::array<double, 2>, 3> dN{};
};
ElementGeometry element_geometry(const Mesh& mesh, int e);

struct NodalField {
  enum class Kind { Scalar, Vector2 };
  Kind kind = Kind::Scalar;
  std::vector<double> values;  // node_count entries, or 2*node_count for Vector2
};

struct PathSample {
  double arclength = 0.0;
  double value = 0.0;
};

// Throws MeshError with a line number on parse failures; fixes clockwise
// elements automatically; derives one node set per boundary-edge tag.
Mesh load_mesh(const std::filesystem::path& path);

// Validates all Mesh invariants (index ranges, positive CCW areas, boundary
// edges on element boundaries and forming closed loops). Throws MeshError.
void validate_mesh(const Mesh& mesh);

// O-grid triangulation of [-L/2, L/2] x [-H/2, H/2] minus the central circle
// of radius r. refinement k gives 24k spokes, 3k rings, 144 k^2 elements.
// Node sets: hole, left_edge, right_edge, top_edge, bottom_edge, outer,
// bottom_left, point_A (L/2, 0), point_B (0, H/2), path_C (spoke from
// (0, r) to (0, H/2), ordered inward to outward).
Mesh generate_plate_with_hole(double length, double height, double hole_radius,
                              int refinement);

// Linear interpolation of a scalar field at count stations spaced uniformly
// in arclength along the polyline. Throws if a station falls outside the mesh.
std::vector<PathSample> sample_along_path(const Mesh& mesh, const NodalField& field,
                                          std::span<const std::array<double, 2>> polyline,
                                          int count);

}  // namespace cpd
