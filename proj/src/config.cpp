#include "cpd/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace cpd {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) known = true;
    if (!known) fail(where, "unknown key '" + key + "'");
  }
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

double get_number(const json& obj, const char* key, const std::string& where,
                  double fallback) {
  return obj.contains(key) ? as_number(obj.at(key), where + "." + key) : fallback;
}

int get_int(const json& obj, const char* key, const std::string& where, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
  return v.get<int>();
}

bool get_bool(const json& obj, const char* key, const std::string& where,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(where + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& where,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

MeshSpec parse_mesh(const json& j) {
  MeshSpec spec;
  if (!j.is_object()) fail("mesh", "expected an object");
  check_keys(j, "mesh", {"generated", "file"});
  if (j.contains("file") == j.contains("generated"))
    fail("mesh", "specify exactly one of 'generated' or 'file'");
  if (j.contains("file")) {
    spec.generated = false;
    spec.file = get_string(j, "file", "mesh", "");
    if (spec.file.empty()) fail("mesh.file", "expected a non-empty path");
    return spec;
  }
  const json& g = j.at("generated");
  if (!g.is_object()) fail("mesh.generated", "expected an object");
  check_keys(g, "mesh.generated", {"length", "height", "hole_radius", "refinement"});
  spec.length = get_number(g, "length", "mesh.generated", spec.length);
  spec.height = get_number(g, "height", "mesh.generated", spec.height);
  spec.hole_radius = get_number(g, "hole_radius", "mesh.generated", spec.hole_radius);
  spec.refinement = get_int(g, "refinement", "mesh.generated", spec.refinement);
  return spec;
}

MaterialParams parse_material(const json& j) {
  if (!j.is_object()) fail("material", "expected an object");
  check_keys(j, "material",
             {"lambda0", "mu0", "lambda1", "mu1", "c_ref", "sigma0", "H", "Et", "n_w",
              "zeta", "rho_b", "d1", "d2", "theta", "eta_T", "eta_S", "E_ref", "phi_T",
              "phi_S", "m_source"});
  MaterialParams m;
  for (const char* key : {"lambda0", "mu0", "sigma0"})
    if (!j.contains(key)) fail("material", std::string("missing required key '") + key + "'");
  m.lambda0 = as_number(j.at("lambda0"), "material.lambda0");
  m.mu0 = as_number(j.at("mu0"), "material.mu0");
  m.sigma0 = as_number(j.at("sigma0"), "material.sigma0");
  m.lambda1 = get_number(j, "lambda1", "material", m.lambda1);
  m.mu1 = get_number(j, "mu1", "material", m.mu1);
  m.c_ref = get_number(j, "c_ref", "material", m.c_ref);
  m.n_w = get_number(j, "n_w", "material", m.n_w);
  m.zeta = get_number(j, "zeta", "material", m.zeta);
  m.d1 = get_number(j, "d1", "material", m.d1);
  m.d2 = get_number(j, "d2", "material", m.d2);
  m.theta = get_number(j, "theta", "material", m.theta);
  m.eta_T = get_number(j, "eta_T", "material", m.eta_T);
  m.eta_S = get_number(j, "eta_S", "material", m.eta_S);
  m.E_ref = get_number(j, "E_ref", "material", m.E_ref);
  m.phi_T = get_number(j, "phi_T", "material", m.phi_T);
  m.phi_S = get_number(j, "phi_S", "material", m.phi_S);
  m.m_source = get_number(j, "m_source", "material", m.m_source);
  if (j.contains("rho_b")) {
    const json& r = j.at("rho_b");
    if (!r.is_array() || r.size() != 2) fail("material.rho_b", "expected [bx, by]");
    m.rho_b = {as_number(r[0], "material.rho_b[0]"), as_number(r[1], "material.rho_b[1]")};
  }
  if (j.contains("H") && j.contains("Et"))
    fail("material", "specify at most one of 'H' and 'Et'");
  if (j.contains("H")) {
    m.H = as_number(j.at("H"), "material.H");
  } else if (j.contains("Et")) {
    const double et = as_number(j.at("Et"), "material.Et");
    m.H = MaterialParams::hardening_from_tangent_modulus(et, m.youngs());
  }
  try {
    m.validate();
  } catch (const ConstitutiveError& err) {
    fail("material", err.what());
  }
  return m;
}

ModelVariant parse_model(const std::string& s) {
  if (s == "I") return ModelVariant::ModelI;
  if (s == "II") return ModelVariant::ModelII;
  if (s == "linear_elastic") return ModelVariant::LinearElastic;
  if (s == "perfect_plastic") return ModelVariant::PerfectPlastic;
  fail("model", "expected one of I, II, linear_elastic, perfect_plastic (got '" + s + "')");
}

std::string model_name(ModelVariant m) {
  switch (m) {
    case ModelVariant::ModelI: return "I";
    case ModelVariant::ModelII: return "II";
    case ModelVariant::LinearElastic: return "linear_elastic";
    case ModelVariant::PerfectPlastic: return "perfect_plastic";
  }
  return "I";
}

CouplingMode parse_mode(const std::string& s) {
  if (s == "uncoupled") return CouplingMode::Uncoupled;
  if (s == "one_way") return CouplingMode::OneWay;
  if (s == "two_way") return CouplingMode::TwoWay;
  fail("coupling", "expected one of uncoupled, one_way, two_way (got '" + s + "')");
}

std::string mode_name(CouplingMode m) {
  switch (m) {
    case CouplingMode::Uncoupled: return "uncoupled";
    case CouplingMode::OneWay: return "one_way";
    case CouplingMode::TwoWay: return "two_way";
  }
  return "two_way";
}

DiffusionPath parse_path(const std::string& s) {
  if (s == "cg") return DiffusionPath::Cg;
  if (s == "nn") return DiffusionPath::Nn;
  fail("diffusion_path", "expected 'cg' or 'nn' (got '" + s + "')");
}

int parse_component(const json& v, const std::string& where) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "x") return 0;
    if (s == "y") return 1;
  }
  fail(where, "expected \"x\" or \"y\"");
}

LoadSchedule parse_schedule(const json& j) {
  if (!j.is_object()) fail("schedule", "expected an object");
  check_keys(j, "schedule", {"default", "steps"});
  if (j.contains("default") == j.contains("steps"))
    fail("schedule", "specify exactly one of 'default' or 'steps'");
  if (j.contains("default")) {
    if (!j.at("default").is_boolean() || !j.at("default").get<bool>())
      fail("schedule.default", "must be true when present");
    return default_load_schedule();
  }
  LoadSchedule s;
  const json& steps = j.at("steps");
  if (!steps.is_array()) fail("schedule.steps", "expected an array of [time, scale]");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const json& row = steps[i];
    const std::string where = "schedule.steps[" + std::to_string(i) + "]";
    if (!row.is_array() || row.size() != 2) fail(where, "expected [time, scale]");
    s.steps.push_back({as_number(row[0], where), as_number(row[1], where)});
  }
  try {
    s.validate();
  } catch (const CouplingError& err) {
    fail("schedule", err.what());
  }
  return s;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& err) {
    throw ConfigError(std::string("config: invalid JSON: ") + err.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(j, "config",
             {"mesh", "material", "model", "coupling", "diffusion_path", "bounds",
              "schedule", "deformation_bc", "diffusion_bc", "initial_concentration",
              "warm_start_diffusion", "newton", "probes", "output", "threads"});
  for (const char* key : {"mesh", "material"})
    if (!j.contains(key)) fail("config", std::string("missing required key '") + key + "'");

  RunConfig cfg;
  cfg.mesh = parse_mesh(j.at("mesh"));
  cfg.material = parse_material(j.at("material"));
  cfg.model = parse_model(get_string(j, "model", "config", "I"));
  cfg.mode = parse_mode(get_string(j, "coupling", "config", "two_way"));
  cfg.path = parse_path(get_string(j, "diffusion_path", "config", "nn"));

  if (j.contains("bounds")) {
    const json& b = j.at("bounds");
    if (!b.is_object()) fail("bounds", "expected an object");
    check_keys(b, "bounds", {"c_min", "c_max"});
    cfg.c_min = get_number(b, "c_min", "bounds", 0.0);
    if (b.contains("c_max")) {
      const json& v = b.at("c_max");
      if (v.is_string() && v.get<std::string>() == "inf")
        cfg.c_max = std::numeric_limits<double>::infinity();
      else
        cfg.c_max = as_number(v, "bounds.c_max");
    }
    if (!(cfg.c_min <= cfg.c_max)) fail("bounds", "c_min must not exceed c_max");
  }

  cfg.schedule = j.contains("schedule") ? parse_schedule(j.at("schedule"))
                                        : default_load_schedule();

  if (j.contains("deformation_bc")) {
    const json& d = j.at("deformation_bc");
    if (!d.is_object()) fail("deformation_bc", "expected an object");
    check_keys(d, "deformation_bc", {"dirichlet", "tractions"});
    if (d.contains("dirichlet")) {
      const json& arr = d.at("dirichlet");
      if (!arr.is_array()) fail("deformation_bc.dirichlet", "expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string where = "deformation_bc.dirichlet[" + std::to_string(i) + "]";
        const json& e = arr[i];
        if (!e.is_object()) fail(where, "expected an object");
        check_keys(e, where, {"node_set", "component", "value", "scale_with_load"});
        DirichletUSpec spec;
        spec.node_set = get_string(e, "node_set", where, "");
        if (spec.node_set.empty()) fail(where, "missing 'node_set'");
        if (!e.contains("component")) fail(where, "missing 'component'");
        spec.component = parse_component(e.at("component"), where + ".component");
        spec.value = get_number(e, "value", where, 0.0);
        spec.scale_with_load = get_bool(e, "scale_with_load", where, false);
        cfg.dirichlet_u.push_back(spec);
      }
    }
    if (d.contains("tractions")) {
      const json& arr = d.at("tractions");
      if (!arr.is_array()) fail("deformation_bc.tractions", "expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string where = "deformation_bc.tractions[" + std::to_string(i) + "]";
        const json& e = arr[i];
        if (!e.is_object()) fail(where, "expected an object");
        check_keys(e, where, {"edge_tag", "traction"});
        TractionSpec spec;
        spec.edge_tag = get_string(e, "edge_tag", where, "");
        if (spec.edge_tag.empty()) fail(where, "missing 'edge_tag'");
        if (!e.contains("traction")) fail(where, "missing 'traction'");
        const json& t = e.at("traction");
        if (!t.is_array() || t.size() != 2) fail(where + ".traction", "expected [tx, ty]");
        spec.traction = {as_number(t[0], where + ".traction[0]"),
                         as_number(t[1], where + ".traction[1]")};
        cfg.tractions.push_back(spec);
      }
    }
  }

  if (j.contains("diffusion_bc")) {
    const json& d = j.at("diffusion_bc");
    if (!d.is_object()) fail("diffusion_bc", "expected an object");
    check_keys(d, "diffusion_bc", {"dirichlet", "flux"});
    if (d.contains("dirichlet")) {
      const json& arr = d.at("dirichlet");
      if (!arr.is_array()) fail("diffusion_bc.dirichlet", "expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string where = "diffusion_bc.dirichlet[" + std::to_string(i) + "]";
        const json& e = arr[i];
        if (!e.is_object()) fail(where, "expected an object");
        check_keys(e, where, {"node_set", "value"});
        DirichletCSpec spec;
        spec.node_set = get_string(e, "node_set", where, "");
        if (spec.node_set.empty()) fail(where, "missing 'node_set'");
        if (!e.contains("value")) fail(where, "missing 'value'");
        spec.value = as_number(e.at("value"), where + ".value");
        if (!std::isfinite(spec.value)) fail(where + ".value", "must be finite");
        cfg.dirichlet_c.push_back(spec);
      }
    }
    if (d.contains("flux")) {
      const json& arr = d.at("flux");
      if (!arr.is_array()) fail("diffusion_bc.flux", "expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string where = "diffusion_bc.flux[" + std::to_string(i) + "]";
        const json& e = arr[i];
        if (!e.is_object()) fail(where, "expected an object");
        check_keys(e, where, {"edge_tag", "value"});
        FluxSpec spec;
        spec.edge_tag = get_string(e, "edge_tag", where, "");
        if (spec.edge_tag.empty()) fail(where, "missing 'edge_tag'");
        spec.flux = get_number(e, "value", where, 0.0);
        cfg.fluxes.push_back(spec);
      }
    }
  }

  const std::string init =
      get_string(j, "initial_concentration", "config", "pure_diffusion");
  if (init == "zero")
    cfg.zero_initial_concentration = true;
  else if (init != "pure_diffusion")
    fail("initial_concentration", "expected 'pure_diffusion' or 'zero'");
  cfg.warm_start_diffusion = get_bool(j, "warm_start_diffusion", "config", false);

  if (j.contains("newton")) {
    const json& n = j.at("newton");
    if (!n.is_object()) fail("newton", "expected an object");
    check_keys(n, "newton", {"rel_tol", "max_iterations"});
    cfg.newton.rel_tol = get_number(n, "rel_tol", "newton", cfg.newton.rel_tol);
    cfg.newton.max_newton = get_int(n, "max_iterations", "newton", cfg.newton.max_newton);
    if (!(cfg.newton.rel_tol > 0.0)) fail("newton.rel_tol", "must be positive");
    if (cfg.newton.max_newton < 1) fail("newton.max_iterations", "must be at least 1");
  }

  if (j.contains("probes")) {
    const json& p = j.at("probes");
    if (!p.is_object()) fail("probes", "expected an object");
    check_keys(p, "probes", {"a", "b"});
    cfg.probe_a = get_string(p, "a", "probes", cfg.probe_a);
    cfg.probe_b = get_string(p, "b", "probes", cfg.probe_b);
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    if (!o.is_object()) fail("output", "expected an object");
    check_keys(o, "output",
               {"directory", "snapshot_every", "write_fields", "path_set",
                "path_samples", "path_steps"});
    cfg.output.directory = get_string(o, "directory", "output", cfg.output.directory);
    cfg.output.snapshot_every =
        get_int(o, "snapshot_every", "output", cfg.output.snapshot_every);
    if (cfg.output.snapshot_every < 0) fail("output.snapshot_every", "must be >= 0");
    cfg.output.write_fields = get_bool(o, "write_fields", "output", cfg.output.write_fields);
    cfg.output.path_set = get_string(o, "path_set", "output", cfg.output.path_set);
    cfg.output.path_samples =
        get_int(o, "path_samples", "output", cfg.output.path_samples);
    if (cfg.output.path_samples < 2) fail("output.path_samples", "must be at least 2");
    const std::string steps = get_string(o, "path_steps", "output", "final");
    if (steps == "final")
      cfg.output.path_steps = PathSteps::Final;
    else if (steps == "all")
      cfg.output.path_steps = PathSteps::All;
    else
      fail("output.path_steps", "expected 'final' or 'all'");
  }

  cfg.threads = get_int(j, "threads", "config", 1);
  if (cfg.threads < 1) fail("threads", "must be at least 1");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const ConfigError& err) {
    throw ConfigError(std::string(err.what()) + " (in " + path.string() + ")");
  }
}

std::string config_to_json(const RunConfig& cfg) {
  json j;
  if (cfg.mesh.generated) {
    j["mesh"]["generated"] = {{"length", cfg.mesh.length},
                              {"height", cfg.mesh.height},
                              {"hole_radius", cfg.mesh.hole_radius},
                              {"refinement", cfg.mesh.refinement}};
  } else {
    j["mesh"]["file"] = cfg.mesh.file;
  }
  json m;
  m["lambda0"] = cfg.material.lambda0;
  m["mu0"] = cfg.material.mu0;
  m["lambda1"] = cfg.material.lambda1;
  m["mu1"] = cfg.material.mu1;
  m["c_ref"] = cfg.material.c_ref;
  m["sigma0"] = cfg.material.sigma0;
  m["H"] = cfg.material.H;
  m["n_w"] = cfg.material.n_w;
  m["zeta"] = cfg.material.zeta;
  m["rho_b"] = {cfg.material.rho_b[0], cfg.material.rho_b[1]};
  m["d1"] = cfg.material.d1;
  m["d2"] = cfg.material.d2;
  m["theta"] = cfg.material.theta;
  m["eta_T"] = cfg.material.eta_T;
  m["eta_S"] = cfg.material.eta_S;
  m["E_ref"] = cfg.material.E_ref;
  m["phi_T"] = cfg.material.phi_T;
  m["phi_S"] = cfg.material.phi_S;
  m["m_source"] = cfg.material.m_source;
  j["material"] = std::move(m);
  j["model"] = model_name(cfg.model);
  j["coupling"] = mode_name(cfg.mode);
  j["diffusion_path"] = cfg.path == DiffusionPath::Nn ? "nn" : "cg";
  j["bounds"]["c_min"] = cfg.c_min;
  if (std::isinf(cfg.c_max))
    j["bounds"]["c_max"] = "inf";
  else
    j["bounds"]["c_max"] = cfg.c_max;
  json steps = json::array();
  for (const auto& s : cfg.schedule.steps) steps.push_back({s.time, s.scale});
  j["schedule"]["steps"] = std::move(steps);
  json du = json::array();
  for (const auto& d : cfg.dirichlet_u) {
    json e = {{"node_set", d.node_set},
              {"component", d.component == 0 ? "x" : "y"},
              {"value", d.value}};
    if (d.scale_with_load) e["scale_with_load"] = true;
    du.push_back(std::move(e));
  }
  j["deformation_bc"]["dirichlet"] = std::move(du);
  json tr = json::array();
  for (const auto& t : cfg.tractions)
    tr.push_back({{"edge_tag", t.edge_tag}, {"traction", {t.traction[0], t.traction[1]}}});
  j["deformation_bc"]["tractions"] = std::move(tr);
  json dc = json::array();
  for (const auto& d : cfg.dirichlet_c)
    dc.push_back({{"node_set", d.node_set}, {"value", d.value}});
  j["diffusion_bc"]["dirichlet"] = std::move(dc);
  json fl = json::array();
  for (const auto& f : cfg.fluxes)
    fl.push_back({{"edge_tag", f.edge_tag}, {"value", f.flux}});
  j["diffusion_bc"]["flux"] = std::move(fl);
  j["initial_concentration"] =
      cfg.zero_initial_concentration ? "zero" : "pure_diffusion";
  j["warm_start_diffusion"] = cfg.warm_start_diffusion;
  j["newton"] = {{"rel_tol", cfg.newton.rel_tol},
                 {"max_iterations", cfg.newton.max_newton}};
  j["probes"] = {{"a", cfg.probe_a}, {"b", cfg.probe_b}};
  j["output"] = {{"directory", cfg.output.directory},
                 {"snapshot_every", cfg.output.snapshot_every},
                 {"write_fields", cfg.output.write_fields},
                 {"path_set", cfg.output.path_set},
                 {"path_samples", cfg.output.path_samples},
                 {"path_steps",
                  cfg.output.path_steps == PathSteps::Final ? "final" : "all"}};
  j["threads"] = cfg.threads;
  return j.dump(2) + "\n";
}

RunConfig preset(const std::string& name, ModelVariant model) {
  RunConfig cfg;
  if (model != ModelVariant::ModelI && model != ModelVariant::ModelII)
    throw ConfigError("config: presets cover models I and II only");
  const bool case1 = name == "caseI";
  if (!case1 && name != "caseII_iso" && name != "caseII_low" && name != "caseII_high")
    throw ConfigError("config: unknown preset '" + name +
                      "' (expected caseI, caseII_iso, caseII_low, caseII_high)");

  MaterialParams& m = cfg.material;
  m.lambda0 = 1.94e10;
  m.mu0 = 2.92e10;
  m.lambda1 = -8.5e8;
  m.mu1 = -8.5e8;
  m.sigma0 = 243e6;
  m.H = MaterialParams::hardening_from_tangent_modulus(2.171e9, m.youngs());
  m.n_w = 5.0;
  m.theta = std::numbers::pi / 3.0;
  m.eta_T = 1.0;
  m.eta_S = 1.0;
  m.E_ref = 0.001;
  m.m_source = 0.0;
  const bool model2 = model == ModelVariant::ModelII;
  if (case1) {
    m.d1 = 50.0;
    m.d2 = 1.0;
    m.c_ref = 0.05;
    m.zeta = -0.3;
    const double phi = model2 ? 1.25 : 1.2;
    m.phi_T = m.phi_S = phi;
  } else {
    m.d1 = 1.0;
    m.d2 = name == "caseII_iso" ? 1.0 : (name == "caseII_low" ? 5.0 : 500.0);
    m.c_ref = 0.0365;
    m.zeta = -0.9;
    const double phi = model2 ? 2.0 : 1.75;
    m.phi_T = m.phi_S = phi;
  }

  cfg.model = model;
  cfg.mode = CouplingMode::TwoWay;
  cfg.path = DiffusionPath::Nn;
  cfg.c_min = 0.0;
  // Model II couples the concentration into the elastic limit; its physical
  // range is capped by the largest boundary datum.
  cfg.c_max = model2 ? 1.0 : std::numeric_limits<double>::infinity();
  cfg.schedule = default_load_schedule();
  cfg.dirichlet_u.push_back({"left_edge", 0, 0.0, false});
  cfg.dirichlet_u.push_back({"bottom_left", 1, 0.0, false});
  cfg.tractions.push_back({"right", {133e6, 0.0}});
  cfg.dirichlet_c.push_back({"hole", 1.0});
  cfg.dirichlet_c.push_back({"outer", 0.0});
  return cfg;
}

Mesh build_mesh(const MeshSpec& spec) {
  if (spec.generated)
    return generate_plate_with_hole(spec.length, spec.height, spec.hole_radius,
                                    spec.refinement);
  return load_mesh(spec.file);
}

CoupledProblem make_problem(const RunConfig& cfg, const Mesh& mesh) {
  CoupledProblem p;
  p.mesh = &mesh;
  p.mat = cfg.material;
  p.model = cfg.model;
  p.mode = cfg.mode;
  p.path = cfg.path;
  p.c_min = cfg.c_min;
  p.c_max = cfg.c_max;
  p.schedule = cfg.schedule;
  p.deformation_opts = cfg.newton;
  p.zero_initial_concentration = cfg.zero_initial_concentration;
  p.warm_start_diffusion = cfg.warm_start_diffusion;
  p.probe_a = cfg.probe_a;
  p.probe_b = cfg.probe_b;
  p.snapshot_every = cfg.output.snapshot_every;
  for (const auto& d : cfg.dirichlet_u) {
    const double v = d.value;
    if (d.scale_with_load)
      p.deformation_bc.dirichlet.push_back(
          {d.node_set, d.component, [v](double s) { return v * s; }});
    else
      p.deformation_bc.dirichlet.push_back(
          {d.node_set, d.component, [v](double) { return v; }});
  }
  for (const auto& t : cfg.tractions) {
    const std::array<double, 2> peak = t.traction;
    p.deformation_bc.neumann.push_back({t.edge_tag, [peak](double s) {
                                          return std::array<double, 2>{peak[0] * s,
                                                                       peak[1] * s};
                                        }});
  }
  for (const auto& d : cfg.dirichlet_c)
    p.diffusion_bc.dirichlet.push_back({d.node_set, d.value});
  for (const auto& f : cfg.fluxes) p.diffusion_bc.neumann.push_back({f.edge_tag, f.flux});
  return p;
}

}  // namespace cpd
