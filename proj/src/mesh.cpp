#include "cpd/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>

namespace cpd {

namespace {

double signed_area(const std::array<double, 2>& p1, const std::array<double, 2>& p2,
                   const std::array<double, 2>& p3) {
  return 0.5 * ((p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1]));
}

}  // namespace

double Mesh::element_area(int e) const {
  const auto& el = elements[static_cast<size_t>(e)];
  return signed_area(nodes[static_cast<size_t>(el[0])], nodes[static_cast<size_t>(el[1])],
                     nodes[static_cast<size_t>(el[2])]);
}

std::array<double, 2> Mesh::centroid(int e) const {
  const auto& el = elements[static_cast<size_t>(e)];
  const auto& a = nodes[static_cast<size_t>(el[0])];
  const auto& b = nodes[static_cast<size_t>(el[1])];
  const auto& c = nodes[static_cast<size_t>(el[2])];
  return {(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0};
}

const std::vector<int>& Mesh::node_set(const std::string& name) const {
  auto it = node_sets.find(name);
  if (it == node_sets.end()) throw MeshError("unknown node set \"" + name + "\"");
  return it->second;
}

ElementGeometry element_geometry(const Mesh& mesh, int e) {
  const auto& el = mesh.elements[static_cast<size_t>(e)];
  const auto& p1 = mesh.nodes[static_cast<size_t>(el[0])];
  const auto& p2 = mesh.nodes[static_cast<size_t>(el[1])];
  const auto& p3 = mesh.nodes[static_cast<size_t>(el[2])];
  ElementGeometry g;
  g.area = signed_area(p1, p2, p3);
  const double inv2a = 1.0 / (2.0 * g.area);
  g.dN[0] = {(p2[1] - p3[1]) * inv2a, (p3[0] - p2[0]) * inv2a};
  g.dN[1] = {(p3[1] - p1[1]) * inv2a, (p1[0] - p3[0]) * inv2a};
  g.dN[2] = {(p1[1] - p2[1]) * inv2a, (p2[0] - p1[0]) * inv2a};
  return g;
}

namespace {

// Whitespace tokenizer that tracks line numbers and strips '#' comments.
class Tokenizer {
 public:
  explicit Tokenizer(std::istream& in) : in_(in) {}

  bool next(std::string& tok) {
    for (;;) {
      if (pos_ >= line_.size()) {
        if (!std::getline(in_, line_)) return false;
        ++line_no_;
        if (auto h = line_.find('#'); h != std::string::npos) line_.resize(h);
        pos_ = 0;
      }
      while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
      if (pos_ >= line_.size()) continue;
      size_t start = pos_;
      while (pos_ < line_.size() && !std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
      tok = line_.substr(start, pos_ - start);
      return true;
    }
  }

  int line() const { return line_no_; }

 private:
  std::istream& in_;
  std::string line_;
  size_t pos_ = 0;
  int line_no_ = 0;
};

[[noreturn]] void parse_fail(const Tokenizer& tok, const std::string& msg) {
  throw MeshError("mesh parse error at line " + std::to_string(tok.line()) + ": " + msg);
}

long long expect_int(Tokenizer& tok, const std::string& what) {
  std::string s;
  if (!tok.next(s)) parse_fail(tok, "unexpected end of file, expected " + what);
  size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    parse_fail(tok, "expected " + what + ", got \"" + s + "\"");
  }
  if (used != s.size()) parse_fail(tok, "expected " + what + ", got \"" + s + "\"");
  return v;
}

double expect_double(Tokenizer& tok, const std::string& what) {
  std::string s;
  if (!tok.next(s)) parse_fail(tok, "unexpected end of file, expected " + what);
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    parse_fail(tok, "expected " + what + ", got \"" + s + "\"");
  }
  if (used != s.size()) parse_fail(tok, "expected " + what + ", got \"" + s + "\"");
  return v;
}

void expect_keyword(Tokenizer& tok, const std::string& kw) {
  std::string s;
  if (!tok.next(s)) parse_fail(tok, "unexpected end of file, expected \"" + kw + "\"");
  if (s != kw) parse_fail(tok, "expected \"" + kw + "\", got \"" + s + "\"");
}

void derive_tag_node_sets(Mesh& mesh) {
  for (const auto& e : mesh.boundary_edges) {
    auto& set = mesh.node_sets[e.tag];
    set.push_back(e.a);
    set.push_back(e.b);
  }
  for (auto& [tag, set] : mesh.node_sets) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }
}

}  // namespace

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  Tokenizer tok(in);
  Mesh mesh;

  expect_keyword(tok, "nodes");
  const long long n = expect_int(tok, "node count");
  if (n < 3) parse_fail(tok, "node count must be at least 3");
  mesh.nodes.reserve(static_cast<size_t>(n));
  for (long long i = 0; i < n; ++i) {
    const double x = expect_double(tok, "node x");
    const double y = expect_double(tok, "node y");
    mesh.nodes.push_back({x, y});
  }

  expect_keyword(tok, "elements");
  const long long m = expect_int(tok, "element count");
  if (m < 1) parse_fail(tok, "element count must be at least 1");
  double coord_scale = 0.0;
  for (const auto& p : mesh.nodes)
    coord_scale = std::max({coord_scale, std::abs(p[0]), std::abs(p[1])});
  mesh.elements.reserve(static_cast<size_t>(m));
  for (long long e = 0; e < m; ++e) {
    std::array<int, 3> el{};
    for (int v = 0; v < 3; ++v) {
      const long long idx = expect_int(tok, "element node index");
      if (idx < 0 || idx >= n)
        parse_fail(tok, "element " + std::to_string(e) + " references node " +
                            std::to_string(idx) + " of " + std::to_string(n));
      el[static_cast<size_t>(v)] = static_cast<int>(idx);
    }
    mesh.elements.push_back(el);
    double area = mesh.element_area(static_cast<int>(e));
    if (area < 0.0) {
      std::swap(mesh.elements.back()[1], mesh.elements.back()[2]);
      area = -area;
    }
    if (area <= 1e-14 * std::max(coord_scale * coord_scale, 1e-300))
      parse_fail(tok, "degenerate (zero-area) element " + std::to_string(e));
  }

  std::string kw;
  if (tok.next(kw)) {
    if (kw != "edges") parse_fail(tok, "expected \"edges\", got \"" + kw + "\"");
    const long long p = expect_int(tok, "edge count");
    mesh.boundary_edges.reserve(static_cast<size_t>(p));
    for (long long i = 0; i < p; ++i) {
      const long long a = expect_int(tok, "edge node index");
      const long long b = expect_int(tok, "edge node index");
      std::string tag;
      if (!tok.next(tag)) parse_fail(tok, "unexpected end of file, expected edge tag");
      if (a < 0 || a >= n || b < 0 || b >= n)
        parse_fail(tok, "edge " + std::to_string(i) + " references node out of range");
      mesh.boundary_edges.push_back({static_cast<int>(a), static_cast<int>(b), tag});
    }
    if (tok.next(kw)) parse_fail(tok, "trailing content \"" + kw + "\"");
  }

  derive_tag_node_sets(mesh);
  validate_mesh(mesh);
  return mesh;
}

void validate_mesh(const Mesh& mesh) {
  const int n = mesh.node_count();
  double coord_scale = 0.0;
  for (const auto& p : mesh.nodes)
    coord_scale = std::max({coord_scale, std::abs(p[0]), std::abs(p[1])});

  std::map<std::pair<int, int>, int> element_edge_count;
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.elements[static_cast<size_t>(e)];
    for (int v : el)
      if (v < 0 || v >= n)
        throw MeshError("element " + std::to_string(e) + " node index out of range");
    if (mesh.element_area(e) <= 1e-14 * std::max(coord_scale * coord_scale, 1e-300))
      throw MeshError("element " + std::to_string(e) + " is degenerate or clockwise");
    for (int v = 0; v < 3; ++v) {
      int a = el[static_cast<size_t>(v)], b = el[static_cast<size_t>((v + 1) % 3)];
      ++element_edge_count[{std::min(a, b), std::max(a, b)}];
    }
  }

  std::map<int, int> boundary_degree;
  for (const auto& be : mesh.boundary_edges) {
    if (be.a < 0 || be.a >= n || be.b < 0 || be.b >= n)
      throw MeshError("boundary edge node index out of range");
    auto it = element_edge_count.find({std::min(be.a, be.b), std::max(be.a, be.b)});
    if (it == element_edge_count.end())
      throw MeshError("boundary edge (" + std::to_string(be.a) + ", " +
                      std::to_string(be.b) + ") is not an element edge");
    if (it->second != 1)
      throw MeshError("boundary edge (" + std::to_string(be.a) + ", " +
                      std::to_string(be.b) + ") is interior (shared by " +
                      std::to_string(it->second) + " elements)");
    ++boundary_degree[be.a];
    ++boundary_degree[be.b];
  }
  for (const auto& [node, deg] : boundary_degree)
    if (deg % 2 != 0)
      throw MeshError("boundary edges do not form closed loops (node " +
                      std::to_string(node) + " has odd degree)");

  for (const auto& [name, set] : mesh.node_sets) {
    if (set.empty()) throw MeshError("node set \"" + name + "\" is empty");
    for (int v : set)
      if (v < 0 || v >= n) throw MeshError("node set \"" + name + "\" index out of range");
  }
}

Mesh generate_plate_with_hole(double length, double height, double hole_radius,
                              int refinement) {
  if (!(length > 0.0) || !(height > 0.0) || !(hole_radius > 0.0))
    throw MeshError("plate dimensions and hole radius must be positive");
  if (hole_radius >= std::min(length, height) / 2.0)
    throw MeshError("hole radius must be smaller than half the smallest plate side");
  if (refinement < 1) throw MeshError("refinement must be at least 1");

  const double hx = length / 2.0, hy = height / 2.0;
  const double alpha = std::atan2(hy, hx);
  const double pi = std::numbers::pi;

  // Eight angular sectors split at the axes and the corner rays; corner rays
  // become exact mesh vertices on every ring.
  const int m1 = 2 * refinement;  // sectors touching the x axis
  const int m2 = 4 * refinement;  // sectors touching the y axis
  const std::array<double, 9> sector_bound{0.0,      alpha,      pi / 2, pi - alpha,
                                           pi,       pi + alpha, 1.5 * pi, 2 * pi - alpha,
                                           2 * pi};
  const std::array<int, 8> sector_count{m1, m2, m2, m1, m1, m2, m2, m1};
  // Sector index -> rectangle side of the outer boundary.
  const std::array<const char*, 8> sector_side{"right", "top", "top", "left",
                                               "left", "bottom", "bottom", "right"};

  std::vector<double> angles;
  std::vector<int> angle_sector;
  for (int s = 0; s < 8; ++s)
    for (int i = 0; i < sector_count[static_cast<size_t>(s)]; ++i) {
      const double t = static_cast<double>(i) / sector_count[static_cast<size_t>(s)];
      angles.push_back(sector_bound[static_cast<size_t>(s)] +
                       t * (sector_bound[static_cast<size_t>(s) + 1] -
                            sector_bound[static_cast<size_t>(s)]));
      angle_sector.push_back(s);
    }
  const int n_theta = static_cast<int>(angles.size());  // 24 * refinement
  const int n_r = 3 * refinement;
  // Radial distribution: a thin first layer hugging the hole, then rings
  // graded toward the hole. The flat first layer reproduces the boundary-
  // layer element shapes a practical mesher puts on a curved boundary.
  const double grading = 1.3;
  const double first_layer = 0.002;  // fraction of the radial span

  Mesh mesh;
  mesh.nodes.reserve(static_cast<size_t>(n_theta) * (static_cast<size_t>(n_r) + 1));
  for (int i = 0; i <= n_r; ++i) {
    const double s =
        i == 0 ? 0.0
               : first_layer + (1.0 - first_layer) *
                                   std::pow(static_cast<double>(i - 1) / (n_r - 1), grading);
    for (int j = 0; j < n_theta; ++j) {
      const double phi = angles[static_cast<size_t>(j)];
      const double c = std::cos(phi), sn = std::sin(phi);
      const double tx = (std::abs(c) > 1e-15) ? hx / std::abs(c) : std::numeric_limits<double>::infinity();
      const double ty = (std::abs(sn) > 1e-15) ? hy / std::abs(sn) : std::numeric_limits<double>::infinity();
      const double t_out = std::min(tx, ty);
      const double x0 = hole_radius * c, y0 = hole_radius * sn;
      const double x1 = t_out * c, y1 = t_out * sn;
      mesh.nodes.push_back({x0 + s * (x1 - x0), y0 + s * (y1 - y0)});
    }
  }

  auto node_id = [n_theta](int ring, int spoke) { return ring * n_theta + spoke; };

  mesh.elements.reserve(2 * static_cast<size_t>(n_theta) * static_cast<size_t>(n_r));
  for (int i = 0; i < n_r; ++i)
    for (int j = 0; j < n_theta; ++j) {
      const int jn = (j + 1) % n_theta;
      // Counter-clockwise quad: inner, outer, outer-next, inner-next.
      const int a = node_id(i, j), b = node_id(i + 1, j);
      const int c = node_id(i + 1, jn), d = node_id(i, jn);
      if ((i + j) % 2 == 0) {
        mesh.elements.push_back({a, b, c});
        mesh.elements.push_back({a, c, d});
      } else {
        mesh.elements.push_back({a, b, d});
        mesh.elements.push_back({b, c, d});
      }
    }

  for (int j = 0; j < n_theta; ++j) {
    const int jn = (j + 1) % n_theta;
    mesh.boundary_edges.push_back({node_id(0, jn), node_id(0, j), "hole"});
    mesh.boundary_edges.push_back(
        {node_id(n_r, j), node_id(n_r, jn), sector_side[static_cast<size_t>(angle_sector[static_cast<size_t>(j)])]});
  }

  auto& sets = mesh.node_sets;
  for (int j = 0; j < n_theta; ++j) {
    sets["hole"].push_back(node_id(0, j));
    sets["outer"].push_back(node_id(n_r, j));
  }
  // Spoke indices of the axis and corner rays, fixed by the sector layout.
  const int j_a = 0;                      // (L/2, 0)
  const int j_b = m1 + m2;                // (0, H/2)
  const int j_bl = 3 * m1 + 2 * m2;       // (-L/2, -H/2)
  auto spoke_range = [&](int from, int to) {  // inclusive, modulo n_theta
    std::vector<int> out;
    for (int j = from;; j = (j + 1) % n_theta) {
      out.push_back(j);
      if (j == to) break;
    }
    return out;
  };
  for (int j : spoke_range(3 * m1 + 4 * m2, m1)) sets["right_edge"].push_back(node_id(n_r, j));
  for (int j : spoke_range(m1, m1 + 2 * m2)) sets["top_edge"].push_back(node_id(n_r, j));
  for (int j : spoke_range(m1 + 2 * m2, 3 * m1 + 2 * m2)) sets["left_edge"].push_back(node_id(n_r, j));
  for (int j : spoke_range(3 * m1 + 2 * m2, 3 * m1 + 4 * m2)) sets["bottom_edge"].push_back(node_id(n_r, j));
  sets["bottom_left"].push_back(node_id(n_r, j_bl));
  sets["point_A"].push_back(node_id(n_r, j_a));
  sets["point_B"].push_back(node_id(n_r, j_b));
  for (int i = 0; i <= n_r; ++i) sets["path_C"].push_back(node_id(i, j_b));

  for (auto& [name, set] : sets) {
    if (name == "path_C") continue;  // keeps inner-to-outer order
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }

  validate_mesh(mesh);
  return mesh;
}

std::vector<PathSample> sample_along_path(const Mesh& mesh, const NodalField& field,
                                          std::span<const std::array<double, 2>> polyline,
                                          int count) {
  if (field.kind != NodalField::Kind::Scalar)
    throw MeshError("sample_along_path expects a scalar field");
  if (field.values.size() != mesh.nodes.size())
    throw MeshError("field size does not match mesh");
  if (polyline.size() < 2) throw MeshError("path needs at least two points");
  if (count < 2) throw MeshError("sample count must be at least 2");

  std::vector<double> seg_start{0.0};
  for (size_t i = 0; i + 1 < polyline.size(); ++i) {
    const double dx = polyline[i + 1][0] - polyline[i][0];
    const double dy = polyline[i + 1][1] - polyline[i][1];
    seg_start.push_back(seg_start.back() + std::hypot(dx, dy));
  }
  const double total = seg_start.back();
  if (!(total > 0.0)) throw MeshError("path has zero length");

  auto point_at = [&](double s) -> std::array<double, 2> {
    size_t seg = 0;
    while (seg + 2 < seg_start.size() && s > seg_start[seg + 1]) ++seg;
    const double len = seg_start[seg + 1] - seg_start[seg];
    const double t = (s - seg_start[seg]) / len;
    return {polyline[seg][0] + t * (polyline[seg + 1][0] - polyline[seg][0]),
            polyline[seg][1] + t * (polyline[seg + 1][1] - polyline[seg][1])};
  };

  auto interpolate = [&](const std::array<double, 2>& p) -> double {
    for (int e = 0; e < mesh.element_count(); ++e) {
      const auto& el = mesh.elements[static_cast<size_t>(e)];
      const auto& p1 = mesh.nodes[static_cast<size_t>(el[0])];
      const auto& p2 = mesh.nodes[static_cast<size_t>(el[1])];
      const auto& p3 = mesh.nodes[static_cast<size_t>(el[2])];
      const double a = signed_area(p1, p2, p3);
      const double l1 = signed_area(p, p2, p3) / a;
      const double l2 = signed_area(p1, p, p3) / a;
      const double l3 = signed_area(p1, p2, p) / a;
      if (l1 >= -1e-9 && l2 >= -1e-9 && l3 >= -1e-9)
        return l1 * field.values[static_cast<size_t>(el[0])] +
               l2 * field.values[static_cast<size_t>(el[1])] +
               l3 * field.values[static_cast<size_t>(el[2])];
    }
    throw MeshError("path point (" + std::to_string(p[0]) + ", " + std::to_string(p[1]) +
                    ") lies outside the mesh");
  };

  std::vector<PathSample> samples;
  samples.reserve(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double s = total * static_cast<double>(k) / (count - 1);
    samples.push_back({s, interpolate(point_at(s))});
  }
  return samples;
}

}  // namespace cpd
