#include "nvie/app/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <sstream>

namespace nvie::app {

namespace {

std::string where(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) {
    throw ConfigError("'" + (section.empty() ? std::string("<root>") : section) +
                      "' must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      ok = ok || key == a;
    }
    if (!ok) {
      std::string list;
      for (const char* a : allowed) {
        list += list.empty() ? a : std::string(", ") + a;
      }
      throw ConfigError("unknown key '" + where(section, key) + "' (allowed: " + list + ")");
    }
  }
}

double get_number(const json& v, const std::string& name) {
  if (!v.is_number()) {
    throw ConfigError("'" + name + "' must be a number");
  }
  return v.get<double>();
}

int get_int(const json& v, const std::string& name) {
  if (!v.is_number_integer()) {
    throw ConfigError("'" + name + "' must be an integer");
  }
  return v.get<int>();
}

bool get_bool(const json& v, const std::string& name) {
  if (!v.is_boolean()) {
    throw ConfigError("'" + name + "' must be true or false");
  }
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& name,
                       std::initializer_list<const char*> choices = {}) {
  if (!v.is_string()) {
    throw ConfigError("'" + name + "' must be a string");
  }
  std::string s = v.get<std::string>();
  if (choices.size() > 0) {
    bool ok = false;
    for (const char* c : choices) {
      ok = ok || s == c;
    }
    if (!ok) {
      throw ConfigError("'" + name + "' has invalid value '" + s + "'");
    }
  }
  return s;
}

// number, [re, im] or {"re": .., "im": ..}
Complex get_complex(const json& v, const std::string& name) {
  if (v.is_number()) {
    return v.get<double>();
  }
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  if (v.is_object()) {
    check_keys(v, name, {"re", "im"});
    return {v.contains("re") ? get_number(v["re"], name + ".re") : 0.0,
            v.contains("im") ? get_number(v["im"], name + ".im") : 0.0};
  }
  throw ConfigError("'" + name + "' must be a number, [re, im] or {\"re\", \"im\"}");
}

Vec3 get_vec3(const json& v, const std::string& name) {
  if (!v.is_array() || v.size() != 3) {
    throw ConfigError("'" + name + "' must be an array of 3 numbers");
  }
  return {get_number(v[0], name), get_number(v[1], name), get_number(v[2], name)};
}

std::array<int, 3> get_int3(const json& v, const std::string& name) {
  if (!v.is_array() || v.size() != 3) {
    throw ConfigError("'" + name + "' must be an array of 3 integers");
  }
  return {get_int(v[0], name), get_int(v[1], name), get_int(v[2], name)};
}

std::vector<double> get_doubles(const json& v, const std::string& name) {
  if (!v.is_array() || v.empty()) {
    throw ConfigError("'" + name + "' must be a non-empty array of numbers");
  }
  std::vector<double> out;
  for (const auto& x : v) {
    out.push_back(get_number(x, name));
  }
  return out;
}

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }
json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

void parse_resolution(const json& j, const std::string& name, BruteForceResolution& r) {
  check_keys(j, name,
             {"n_radial", "n_polar", "n_azimuthal", "n_outer", "radial_ratio", "admissibility",
              "refinement_factor", "rel_tol", "max_refinements"});
  if (j.contains("n_radial")) r.n_radial = get_int(j["n_radial"], name + ".n_radial");
  if (j.contains("n_polar")) r.n_polar = get_int(j["n_polar"], name + ".n_polar");
  if (j.contains("n_azimuthal")) r.n_azimuthal = get_int(j["n_azimuthal"], name + ".n_azimuthal");
  if (j.contains("n_outer")) r.n_outer = get_int(j["n_outer"], name + ".n_outer");
  if (j.contains("radial_ratio")) r.radial_ratio = get_number(j["radial_ratio"], name);
  if (j.contains("admissibility")) r.admissibility = get_number(j["admissibility"], name);
  if (j.contains("refinement_factor")) r.refinement_factor = get_number(j["refinement_factor"], name);
  if (j.contains("rel_tol")) r.rel_tol = get_number(j["rel_tol"], name + ".rel_tol");
  if (j.contains("max_refinements")) r.max_refinements = get_int(j["max_refinements"], name);
}

json resolution_json(const BruteForceResolution& r) {
  return {{"n_radial", r.n_radial},         {"n_polar", r.n_polar},
          {"n_azimuthal", r.n_azimuthal},   {"n_outer", r.n_outer},
          {"radial_ratio", r.radial_ratio}, {"admissibility", r.admissibility},
          {"refinement_factor", r.refinement_factor},
          {"rel_tol", r.rel_tol},           {"max_refinements", r.max_refinements}};
}

}  // namespace

IncidentWave RunConfig::default_wave() {
  IncidentWave w;
  w.polarization = ComplexVec3(1.0, 0.0, 0.0);
  w.phase_vector = Vec3(0.0, -1.0, 0.5);
  w.amplitude = 1.0;
  return w;
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  check_keys(j, "",
             {"material", "contrast", "mesh", "m", "delta", "corrections", "correction_form",
              "incident", "solver", "resolution", "ball_resolution", "tables", "export",
              "weight_accuracy", "delta_independence", "p_convergence", "threads", "seed"});
  if (j.contains("material")) {
    const json& s = j["material"];
    check_keys(s, "material", {"omega", "mu", "eps_background"});
    if (s.contains("omega")) c.omega = get_number(s["omega"], "material.omega");
    if (s.contains("mu")) c.mu = get_number(s["mu"], "material.mu");
    if (s.contains("eps_background"))
      c.eps_background = get_number(s["eps_background"], "material.eps_background");
  }
  if (j.contains("contrast")) c.contrast = get_complex(j["contrast"], "contrast");
  if (j.contains("mesh")) {
    const json& s = j["mesh"];
    check_keys(s, "mesh",
               {"kind", "domain_min", "domain_max", "elements", "first_center", "edge", "gap",
                "counts"});
    if (s.contains("kind")) c.mesh.kind = get_string(s["kind"], "mesh.kind", {"grid", "array"});
    if (s.contains("domain_min")) c.mesh.domain_min = get_vec3(s["domain_min"], "mesh.domain_min");
    if (s.contains("domain_max")) c.mesh.domain_max = get_vec3(s["domain_max"], "mesh.domain_max");
    if (s.contains("elements")) c.mesh.elements = get_int3(s["elements"], "mesh.elements");
    if (s.contains("first_center"))
      c.mesh.first_center = get_vec3(s["first_center"], "mesh.first_center");
    if (s.contains("edge")) c.mesh.edge = get_number(s["edge"], "mesh.edge");
    if (s.contains("gap")) c.mesh.gap = get_number(s["gap"], "mesh.gap");
    if (s.contains("counts")) c.mesh.counts = get_int3(s["counts"], "mesh.counts");
  }
  if (j.contains("m")) c.m = get_int(j["m"], "m");
  if (j.contains("delta")) c.delta = get_number(j["delta"], "delta");
  if (j.contains("corrections")) c.corrections = get_bool(j["corrections"], "corrections");
  if (j.contains("correction_form")) {
    c.correction_form =
        get_string(j["correction_form"], "correction_form", {"interpolated", "literal"}) ==
                "literal"
            ? CorrectionForm::literal
            : CorrectionForm::interpolated;
  }
  if (j.contains("incident")) {
    const json& s = j["incident"];
    check_keys(s, "incident", {"polarization", "phase_vector", "amplitude"});
    if (s.contains("polarization")) {
      const json& p = s["polarization"];
      if (!p.is_array() || p.size() != 3) {
        throw ConfigError("'incident.polarization' must be an array of 3 components");
      }
      for (int a = 0; a < 3; ++a) {
        c.wave.polarization(a) = get_complex(p[static_cast<std::size_t>(a)], "incident.polarization");
      }
    }
    if (s.contains("phase_vector"))
      c.wave.phase_vector = get_vec3(s["phase_vector"], "incident.phase_vector");
    if (s.contains("amplitude")) c.wave.amplitude = get_complex(s["amplitude"], "incident.amplitude");
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    check_keys(s, "solver",
               {"method", "tol", "restart", "max_iter", "block_jacobi", "storage", "cross_check"});
    if (s.contains("method")) c.solver.method = get_string(s["method"], "solver.method", {"direct", "gmres"});
    if (s.contains("tol")) c.solver.tol = get_number(s["tol"], "solver.tol");
    if (s.contains("restart")) c.solver.restart = get_int(s["restart"], "solver.restart");
    if (s.contains("max_iter")) c.solver.max_iter = get_int(s["max_iter"], "solver.max_iter");
    if (s.contains("block_jacobi")) c.solver.block_jacobi = get_bool(s["block_jacobi"], "solver.block_jacobi");
    if (s.contains("storage"))
      c.solver.storage = get_string(s["storage"], "solver.storage", {"auto", "dense", "matrix_free"});
    if (s.contains("cross_check")) c.solver.cross_check = get_bool(s["cross_check"], "solver.cross_check");
  }
  if (j.contains("resolution")) parse_resolution(j["resolution"], "resolution", c.resolution);
  if (j.contains("ball_resolution"))
    parse_resolution(j["ball_resolution"], "ball_resolution", c.ball_resolution);
  if (j.contains("tables")) {
    const json& s = j["tables"];
    check_keys(s, "tables", {"directory", "build_missing"});
    if (s.contains("directory")) c.tables.directory = get_string(s["directory"], "tables.directory");
    if (s.contains("build_missing"))
      c.tables.build_missing = get_bool(s["build_missing"], "tables.build_missing");
  }
  if (j.contains("export")) {
    const json& s = j["export"];
    check_keys(s, "export", {"axis", "value", "points", "nodes"});
    if (s.contains("axis")) c.export_spec.axis = get_string(s["axis"], "export.axis", {"x", "y", "z"});
    if (s.contains("value")) c.export_spec.value = get_number(s["value"], "export.value");
    if (s.contains("points")) {
      const json& p = s["points"];
      if (!p.is_array() || p.size() != 2) {
        throw ConfigError("'export.points' must be an array of 2 integers");
      }
      c.export_spec.points = {get_int(p[0], "export.points"), get_int(p[1], "export.points")};
    }
    if (s.contains("nodes")) c.export_spec.nodes = get_bool(s["nodes"], "export.nodes");
  }
  if (j.contains("weight_accuracy")) {
    const json& s = j["weight_accuracy"];
    check_keys(s, "weight_accuracy",
               {"m", "deltas", "reference_delta", "reference_integrand", "tolerance"});
    auto& w = c.weight_accuracy;
    if (s.contains("m")) w.m = get_int(s["m"], "weight_accuracy.m");
    if (s.contains("deltas")) w.deltas = get_doubles(s["deltas"], "weight_accuracy.deltas");
    if (s.contains("reference_delta"))
      w.reference_delta = get_number(s["reference_delta"], "weight_accuracy.reference_delta");
    if (s.contains("reference_integrand"))
      w.reference_integrand = get_string(s["reference_integrand"],
                                         "weight_accuracy.reference_integrand",
                                         {"interpolated", "exact"});
    if (s.contains("tolerance")) w.tolerance = get_number(s["tolerance"], "weight_accuracy.tolerance");
  }
  if (j.contains("delta_independence")) {
    const json& s = j["delta_independence"];
    check_keys(s, "delta_independence", {"deltas", "reference_delta", "row"});
    auto& d = c.delta_independence;
    if (s.contains("deltas")) d.deltas = get_doubles(s["deltas"], "delta_independence.deltas");
    if (s.contains("reference_delta"))
      d.reference_delta = get_number(s["reference_delta"], "delta_independence.reference_delta");
    if (s.contains("row")) d.row = get_int(s["row"], "delta_independence.row");
  }
  if (j.contains("p_convergence")) {
    const json& s = j["p_convergence"];
    check_keys(s, "p_convergence", {"m_values", "grid"});
    auto& p = c.p_convergence;
    if (s.contains("m_values")) {
      const json& v = s["m_values"];
      if (!v.is_array() || v.size() < 3) {
        throw ConfigError("'p_convergence.m_values' must list at least 3 integers");
      }
      p.m_values.clear();
      for (const auto& x : v) {
        p.m_values.push_back(get_int(x, "p_convergence.m_values"));
      }
    }
    if (s.contains("grid")) p.grid = get_int(s["grid"], "p_convergence.grid");
  }
  if (j.contains("threads")) c.threads = get_int(j["threads"], "threads");
  if (j.contains("seed")) c.seed = get_int(j["seed"], "seed");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path);
  }
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json pol = json::array();
  for (int a = 0; a < 3; ++a) {
    pol.push_back(complex_json(c.wave.polarization(a)));
  }
  json exp = {{"axis", c.export_spec.axis},
              {"points", {c.export_spec.points[0], c.export_spec.points[1]}},
              {"nodes", c.export_spec.nodes}};
  if (!std::isnan(c.export_spec.value)) {
    exp["value"] = c.export_spec.value;
  }
  return {
      {"material", {{"omega", c.omega}, {"mu", c.mu}, {"eps_background", c.eps_background}}},
      {"contrast", complex_json(c.contrast)},
      {"mesh",
       {{"kind", c.mesh.kind},
        {"domain_min", vec3_json(c.mesh.domain_min)},
        {"domain_max", vec3_json(c.mesh.domain_max)},
        {"elements", c.mesh.elements},
        {"first_center", vec3_json(c.mesh.first_center)},
        {"edge", c.mesh.edge},
        {"gap", c.mesh.gap},
        {"counts", c.mesh.counts}}},
      {"m", c.m},
      {"delta", c.delta},
      {"corrections", c.corrections},
      {"correction_form",
       c.correction_form == CorrectionForm::literal ? "literal" : "interpolated"},
      {"incident",
       {{"polarization", pol},
        {"phase_vector", vec3_json(c.wave.phase_vector)},
        {"amplitude", complex_json(c.wave.amplitude)}}},
      {"solver",
       {{"method", c.solver.method},
        {"tol", c.solver.tol},
        {"restart", c.solver.restart},
        {"max_iter", c.solver.max_iter},
        {"block_jacobi", c.solver.block_jacobi},
        {"storage", c.solver.storage},
        {"cross_check", c.solver.cross_check}}},
      {"resolution", resolution_json(c.resolution)},
      {"ball_resolution", resolution_json(c.ball_resolution)},
      {"tables", {{"directory", c.tables.directory}, {"build_missing", c.tables.build_missing}}},
      {"export", exp},
      {"weight_accuracy",
       {{"m", c.weight_accuracy.m},
        {"deltas", c.weight_accuracy.deltas},
        {"reference_delta", c.weight_accuracy.reference_delta},
        {"reference_integrand", c.weight_accuracy.reference_integrand},
        {"tolerance", c.weight_accuracy.tolerance}}},
      {"delta_independence",
       {{"deltas", c.delta_independence.deltas},
        {"reference_delta", c.delta_independence.reference_delta},
        {"row", c.delta_independence.row}}},
      {"p_convergence", {{"m_values", c.p_convergence.m_values}, {"grid", c.p_convergence.grid}}},
      {"threads", c.threads},
      {"seed", c.seed},
  };
}

void validate(const RunConfig& c) {
  // MaterialParams checks positivity.
  try {
    (void)material(c);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  if (c.m < 1 || c.m > 16) {
    throw ConfigError("m must be in [1, 16]");
  }
  c.resolution.validate();
  c.ball_resolution.validate();
  if (!(c.solver.tol > 0.0 && c.solver.tol <= 1e-2)) {
    throw ConfigError("solver.tol must lie in (0, 1e-2]");
  }
  if (c.solver.restart < 1 || c.solver.max_iter < 1) {
    throw ConfigError("solver.restart and solver.max_iter must be positive");
  }
  if (c.export_spec.points[0] < 1 || c.export_spec.points[1] < 1) {
    throw ConfigError("export.points must be positive");
  }
  if (c.p_convergence.grid < 1) {
    throw ConfigError("p_convergence.grid must be positive");
  }
  if (c.threads < 0) {
    throw ConfigError("threads must be non-negative");
  }
  (void)build_mesh_from(c, c.m);
}

MaterialParams material(const RunConfig& c) {
  return MaterialParams(c.omega, c.mu, c.eps_background);
}

Mesh build_mesh_from(const RunConfig& c, int m) {
  const ContrastFunction fn = constant_contrast(c.contrast);
  if (c.mesh.kind == "array") {
    return build_array_mesh(c.mesh.first_center, c.mesh.edge, c.mesh.gap, c.mesh.counts, m, fn);
  }
  return build_mesh(c.mesh.domain_min, c.mesh.domain_max, c.mesh.elements, m, fn);
}

CorrectionConfig correction_config(const RunConfig& c, double delta) {
  CorrectionConfig cc;
  cc.delta = delta;
  cc.ball_res = c.ball_resolution;
  cc.enabled = c.corrections;
  cc.form = c.correction_form;
  return cc;
}

std::string config_hash(const RunConfig& c) {
  const std::string dump = to_json(c).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace nvie::app
