#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "cpd/mesh.hpp"

using namespace cpd;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream out(p);
  out << content;
  return p;
}

}  // namespace

TEST_CASE("load_mesh: unit right triangle has area 0.5") {
  auto p = write_temp("tri.msh",
                      "# one triangle\n"
                      "nodes 3\n0 0\n1 0\n0 1\n"
                      "elements 1\n0 1 2\n"
                      "edges 3\n0 1 south\n1 2 hyp\n2 0 west\n");
  auto m = load_mesh(p);
  CHECK(m.element_count() == 1);
  CHECK(m.element_area(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.node_set("hyp") == std::vector<int>{1, 2});
}

TEST_CASE("load_mesh: clockwise triangle is reoriented to positive area") {
  auto p = write_temp("cw.msh",
                      "nodes 3\n0 0\n1 0\n0 1\n"
                      "elements 1\n0 2 1\n"  // clockwise
                      "edges 3\n0 1 s\n1 2 h\n2 0 w\n");
  auto m = load_mesh(p);
  CHECK(m.element_area(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.element_area(0) > 0.0);
}

TEST_CASE("load_mesh: out-of-range node index reports the line") {
  auto p = write_temp("bad.msh",
                      "nodes 4\n0 0\n1 0\n0 1\n1 1\n"
                      "elements 1\n0 1 99\n");
  CHECK_THROWS_WITH_AS(load_mesh(p),
                       doctest::Contains("references node 99 of 4"), MeshError);
}

TEST_CASE("load_mesh: degenerate element is rejected") {
  auto p = write_temp("degen.msh",
                      "nodes 3\n0 0\n1 0\n2 0\n"
                      "elements 1\n0 1 2\n");
  CHECK_THROWS_WITH_AS(load_mesh(p), doctest::Contains("degenerate"), MeshError);
}

TEST_CASE("load_mesh: parse error carries a line number") {
  auto p = write_temp("junk.msh", "nodes 3\n0 0\n1 0\nx y\nelements 1\n0 1 2\n");
  CHECK_THROWS_WITH_AS(load_mesh(p), doctest::Contains("line 4"), MeshError);
}

TEST_CASE("generator: invalid geometry and refinement are rejected") {
  CHECK_THROWS_AS(generate_plate_with_hole(0.36, 0.20, 0.10, 2), MeshError);
  CHECK_THROWS_AS(generate_plate_with_hole(0.36, 0.20, 0.25, 2), MeshError);
  CHECK_THROWS_AS(generate_plate_with_hole(0.36, 0.20, 0.05, 0), MeshError);
  CHECK_THROWS_AS(generate_plate_with_hole(-1.0, 0.20, 0.05, 1), MeshError);
}

TEST_CASE("generator: invariants hold for refinement 1..5 and counts grow") {
  int prev_elements = 0;
  for (int k = 1; k <= 5; ++k) {
    auto m = generate_plate_with_hole(0.36, 0.20, 0.05, k);
    CHECK_NOTHROW(validate_mesh(m));
    CHECK(m.element_count() == 144 * k * k);
    CHECK(m.element_count() > prev_elements);
    prev_elements = m.element_count();
    for (const auto& name :
         {"hole", "left_edge", "right_edge", "top_edge", "bottom_edge", "outer",
          "bottom_left", "point_A", "point_B", "path_C"})
      CHECK(!m.node_set(name).empty());
    // Hole nodes on the circle within 1e-12 * r.
    for (int idx : m.node_set("hole")) {
      const auto& p = m.nodes[idx];
      CHECK(std::abs(std::hypot(p[0], p[1]) - 0.05) <= 1e-12 * 0.05);
    }
  }
}

TEST_CASE("generator: total area converges to the analytic value") {
  const double exact = 0.36 * 0.20 - std::numbers::pi * 0.05 * 0.05;
  for (int k : {2, 4}) {
    auto m = generate_plate_with_hole(0.36, 0.20, 0.05, k);
    double area = 0.0;
    for (int e = 0; e < m.element_count(); ++e) area += m.element_area(e);
    const double rel = std::abs(area - exact) / exact;
    CHECK(rel < (k == 2 ? 0.02 : 0.005));
  }
}

TEST_CASE("generator: named points sit where declared") {
  auto m = generate_plate_with_hole(0.36, 0.20, 0.05, 3);
  const auto& a = m.nodes[m.node_set("point_A")[0]];
  CHECK(a[0] == doctest::Approx(0.18).epsilon(1e-12));
  CHECK(std::abs(a[1]) < 1e-12);
  const auto& b = m.nodes[m.node_set("point_B")[0]];
  CHECK(std::abs(b[0]) < 1e-12);
  CHECK(b[1] == doctest::Approx(0.10).epsilon(1e-12));
  const auto& bl = m.nodes[m.node_set("bottom_left")[0]];
  CHECK(bl[0] == doctest::Approx(-0.18).epsilon(1e-12));
  CHECK(bl[1] == doctest::Approx(-0.10).epsilon(1e-12));
  // path_C runs from the hole to the top edge along x = 0.
  const auto& path = m.node_set("path_C");
  CHECK(m.nodes[path.front()][1] == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(m.nodes[path.back()][1] == doctest::Approx(0.10).epsilon(1e-12));
  for (size_t i = 0; i + 1 < path.size(); ++i)
    CHECK(m.nodes[path[i]][1] < m.nodes[path[i + 1]][1]);
}

TEST_CASE("P1 interpolation reproduces affine fields on every element") {
  auto m = generate_plate_with_hole(0.36, 0.20, 0.05, 2);
  // f(x, y) = 2 + 3x - 5y interpolated at centroids via element geometry.
  NodalField f{NodalField::Kind::Scalar, {}};
  f.values.resize(m.nodes.size());
  for (size_t i = 0; i < m.nodes.size(); ++i)
    f.values[i] = 2.0 + 3.0 * m.nodes[i][0] - 5.0 * m.nodes[i][1];
  for (int e = 0; e < m.element_count(); ++e) {
    const auto& el = m.elements[e];
    const auto c = m.centroid(e);
    const double exact = 2.0 + 3.0 * c[0] - 5.0 * c[1];
    const double interp =
        (f.values[el[0]] + f.values[el[1]] + f.values[el[2]]) / 3.0;
    CHECK(interp == doctest::Approx(exact).epsilon(1e-13));
    // Gradient of the P1 interpolant equals the field gradient.
    auto g = element_geometry(m, e);
    double gx = 0.0, gy = 0.0;
    for (int v = 0; v < 3; ++v) {
      gx += g.dN[v][0] * f.values[el[v]];
      gy += g.dN[v][1] * f.values[el[v]];
    }
    CHECK(gx == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(gy == doctest::Approx(-5.0).epsilon(1e-10));
  }
}

TEST_CASE("sample_along_path: constants, linears, and nodal looks") {
  auto m = generate_plate_with_hole(0.36, 0.20, 0.05, 2);
  NodalField constant{NodalField::Kind::Scalar, std::vector<double>(m.nodes.size(), 3.0)};
  const std::array<std::array<double, 2>, 2> path{{{0.0, 0.06}, {0.0, 0.09}}};
  auto s1 = sample_along_path(m, constant, path, 7);
  CHECK(s1.size() == 7);
  for (const auto& s : s1) CHECK(s.value == doctest::Approx(3.0).epsilon(1e-14));
  for (size_t i = 0; i + 1 < s1.size(); ++i) CHECK(s1[i].arclength < s1[i + 1].arclength);

  NodalField linear{NodalField::Kind::Scalar, {}};
  linear.values.resize(m.nodes.size());
  for (size_t i = 0; i < m.nodes.size(); ++i) linear.values[i] = m.nodes[i][0];
  const std::array<std::array<double, 2>, 2> xpath{{{0.06, 0.0}, {0.16, 0.0}}};
  auto s2 = sample_along_path(m, linear, xpath, 11);
  for (const auto& s : s2)
    CHECK(s.value == doctest::Approx(0.06 + s.arclength).epsilon(1e-10));

  // Stations at path_C nodes reproduce nodal values exactly.
  NodalField wavy{NodalField::Kind::Scalar, {}};
  wavy.values.resize(m.nodes.size());
  for (size_t i = 0; i < m.nodes.size(); ++i)
    wavy.values[i] = std::sin(40.0 * m.nodes[i][1]) + m.nodes[i][0];
  const auto& path_c = m.node_set("path_C");
  for (int idx : path_c) {
    const std::array<std::array<double, 2>, 2> seg{
        {{m.nodes[path_c.front()][0], m.nodes[path_c.front()][1]},
         {m.nodes[idx][0], m.nodes[idx][1]}}};
    if (idx == path_c.front()) continue;
    auto s = sample_along_path(m, wavy, seg, 2);
    CHECK(s.back().value == doctest::Approx(wavy.values[idx]).epsilon(1e-10));
  }
}

TEST_CASE("sample_along_path: outside point is an error") {
  auto m = generate_plate_with_hole(0.36, 0.20, 0.05, 1);
  NodalField f{NodalField::Kind::Scalar, std::vector<double>(m.nodes.size(), 0.0)};
  const std::array<std::array<double, 2>, 2> through_hole{{{-0.02, 0.0}, {0.02, 0.0}}};
  CHECK_THROWS_AS(sample_along_path(m, f, through_hole, 5), MeshError);
}
