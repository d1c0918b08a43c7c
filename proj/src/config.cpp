#include "thermiga/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace thermiga {

namespace {

struct RawEntry {
  std::string value;
  int line;
  bool consumed = false;
};

struct RawConfig {
  // section -> key -> entries in file order
  std::map<std::string, std::map<std::string, std::vector<RawEntry>>> sections;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

RawConfig read_ini(const std::string& path, const std::string& default_section) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  RawConfig raw;
  std::string section = default_section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw config_error("malformed section header", line_no);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw config_error("empty section name", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw config_error("expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw config_error("empty key", line_no);
    raw.sections[section][key].push_back({value, line_no, false});
  }
  return raw;
}

double to_double(const std::string& s, int line, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw config_error("value of '" + what + "' is not a number: '" + s + "'", line);
  return v;
}

int to_int(const std::string& s, int line, const std::string& what) {
  const double v = to_double(s, line, what);
  const int i = static_cast<int>(std::lround(v));
  if (v != i) throw config_error("value of '" + what + "' is not an integer: '" + s + "'", line);
  return i;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

/// Consuming view over the raw entries; leftover keys are reported as errors.
class Reader {
 public:
  explicit Reader(RawConfig raw) : raw_(std::move(raw)) {}

  std::optional<std::string> get(const std::string& sec, const std::string& key) {
    auto* e = find(sec, key);
    if (!e) return std::nullopt;
    if (e->size() > 1)
      throw config_error("key '" + sec + "." + key + "' given more than once",
                         (*e)[1].line);
    (*e)[0].consumed = true;
    last_line_ = (*e)[0].line;
    return (*e)[0].value;
  }

  std::vector<std::pair<std::string, int>> get_all(const std::string& sec,
                                                   const std::string& key) {
    std::vector<std::pair<std::string, int>> out;
    auto* e = find(sec, key);
    if (!e) return out;
    for (auto& entry : *e) {
      entry.consumed = true;
      out.emplace_back(entry.value, entry.line);
    }
    return out;
  }

  double get_double(const std::string& sec, const std::string& key, double dflt) {
    auto v = get(sec, key);
    return v ? to_double(*v, last_line_, sec + "." + key) : dflt;
  }

  std::optional<double> get_double_opt(const std::string& sec, const std::string& key) {
    auto v = get(sec, key);
    if (!v) return std::nullopt;
    return to_double(*v, last_line_, sec + "." + key);
  }

  int get_int(const std::string& sec, const std::string& key, int dflt) {
    auto v = get(sec, key);
    return v ? to_int(*v, last_line_, sec + "." + key) : dflt;
  }

  double require_double(const std::string& sec, const std::string& key) {
    auto v = get(sec, key);
    if (!v) throw config_error("missing required key '" + sec + "." + key + "'");
    return to_double(*v, last_line_, sec + "." + key);
  }

  std::vector<double> get_doubles(const std::string& sec, const std::string& key) {
    auto v = get(sec, key);
    std::vector<double> out;
    if (!v) return out;
    for (const auto& tok : split_ws(*v)) out.push_back(to_double(tok, last_line_, sec + "." + key));
    return out;
  }

  int last_line() const { return last_line_; }

  void finish() const {
    for (const auto& [sec, keys] : raw_.sections)
      for (const auto& [key, entries] : keys)
        for (const auto& e : entries)
          if (!e.consumed)
            throw config_error("unknown key '" + sec + "." + key + "'", e.line);
  }

 private:
  std::vector<RawEntry>* find(const std::string& sec, const std::string& key) {
    auto s = raw_.sections.find(sec);
    if (s == raw_.sections.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    return &k->second;
  }

  RawConfig raw_;
  int last_line_ = 0;
};

int integral(double v, const std::string& what) {
  const int i = static_cast<int>(std::lround(v));
  if (v != i) throw config_error("value of '" + what + "' must be an integer");
  return i;
}

NurbsVolume geometry_from_reader(Reader& r, const std::string& base_dir) {
  if (auto c = r.get("geometry", "case")) {
    if (*c == "quarter_cylinder") return quarter_cylinder_part();
    throw config_error("unknown bundled geometry case '" + *c + "'", r.last_line());
  }
  if (auto f = r.get("geometry", "file")) {
    std::filesystem::path p(*f);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    return read_geometry_file(p.string());
  }

  auto degrees = r.get_doubles("geometry", "degrees");
  if (degrees.size() != 3)
    throw config_error("geometry.degrees must list three integers", r.last_line());
  std::array<std::vector<double>, 3> knots = {r.get_doubles("geometry", "knots_xi"),
                                              r.get_doubles("geometry", "knots_eta"),
                                              r.get_doubles("geometry", "knots_zeta")};
  auto dims = r.get_doubles("geometry", "grid_dims");
  if (dims.size() != 3)
    throw config_error("geometry.grid_dims must list three integers", r.last_line());

  ControlGrid grid;
  for (int d = 0; d < 3; ++d) grid.dims[d] = integral(dims[d], "geometry.grid_dims");
  auto cps = r.get_all("geometry", "cp");
  if (static_cast<int>(cps.size()) != grid.count())
    throw config_error("geometry needs " + std::to_string(grid.count()) +
                       " 'cp' lines (xi-fastest order), got " + std::to_string(cps.size()));
  for (const auto& [value, line] : cps) {
    auto tok = split_ws(value);
    if (tok.size() != 4) throw config_error("cp line must read 'x y z w'", line);
    std::array<double, 4> p{};
    for (int c = 0; c < 4; ++c) p[c] = to_double(tok[c], line, "geometry.cp");
    grid.pts.push_back(p);
  }

  try {
    std::array<KnotVector, 3> kvs = {
        KnotVector(knots[0], integral(degrees[0], "geometry.degrees")),
        KnotVector(knots[1], integral(degrees[1], "geometry.degrees")),
        KnotVector(knots[2], integral(degrees[2], "geometry.degrees"))};
    return NurbsVolume(kvs, std::move(grid));
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("invalid geometry: ") + e.what());
  }
}

FaceId parse_face(const std::string& name, int line) {
  try {
    return face_from_name(name);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what(), line);
  }
}

}  // namespace

NurbsVolume read_geometry_file(const std::string& path) {
  Reader r(read_ini(path, "geometry"));
  NurbsVolume vol = geometry_from_reader(r, std::filesystem::path(path).parent_path().string());
  r.finish();
  return vol;
}

void write_geometry_file(const NurbsVolume& vol, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path);
  const auto p = vol.degrees();
  out << "degrees = " << p[0] << " " << p[1] << " " << p[2] << "\n";
  const char* names[3] = {"knots_xi", "knots_eta", "knots_zeta"};
  for (int d = 0; d < 3; ++d) {
    out << names[d] << " =";
    for (double v : vol.knots(d).values()) out << " " << fmt_full(v);
    out << "\n";
  }
  const auto& g = vol.grid();
  out << "grid_dims = " << g.dims[0] << " " << g.dims[1] << " " << g.dims[2] << "\n";
  for (const auto& cp : g.pts)
    out << "cp = " << fmt_full(cp[0]) << " " << fmt_full(cp[1]) << " " << fmt_full(cp[2])
        << " " << fmt_full(cp[3]) << "\n";
  if (!out) throw io_error("write failure on " + path);
}

RunConfig parse_config(const std::string& path) {
  Reader r(read_ini(path, ""));
  const std::string base_dir = std::filesystem::path(path).parent_path().string();

  NurbsVolume geometry = geometry_from_reader(r, base_dir);

  Material mat;
  mat.conductivity = r.require_double("material", "conductivity");
  mat.density = r.require_double("material", "density");
  mat.heat_capacity = r.require_double("material", "heat_capacity");
  mat.platform_temperature = r.get_double("material", "platform_temperature", 0.0);
  try {
    mat.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }

  LaserSpec laser;
  laser.power = r.require_double("laser", "power");
  laser.speed = r.get_double("laser", "speed", 0.5);
  laser.spot_radius = r.require_double("laser", "spot_radius");
  laser.absorptivity = r.require_double("laser", "absorptivity");
  laser.dt = r.get_double("laser", "dt", 1e-5);
  try {
    laser.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }

  ScanPath scan;
  scan.start_time = r.get_double("scan", "start_time", 0.0);
  double max_z = 0.0;
  for (const auto& cp : geometry.grid().pts) max_z = std::max(max_z, cp[2]);
  scan.plane_z = r.get_double("scan", "plane_z", max_z);
  for (const auto& [value, line] : r.get_all("scan", "waypoint")) {
    auto tok = split_ws(value);
    if (tok.size() != 2) throw config_error("waypoint must read 'x y' (meters)", line);
    scan.waypoints.push_back(
        {to_double(tok[0], line, "scan.waypoint"), to_double(tok[1], line, "scan.waypoint")});
  }
  if (scan.waypoints.empty()) throw config_error("missing required key 'scan.waypoint'");

  BoundaryTags tags;
  {
    std::array<bool, 6> seen{};
    for (FaceId f : kAllFaces) {
      auto v = r.get("faces", face_name(f));
      if (!v) throw config_error(std::string("missing face tag 'faces.") + face_name(f) + "'");
      FaceRole role;
      if (*v == "bottom")
        role = FaceRole::bottom;
      else if (*v == "lateral")
        role = FaceRole::lateral;
      else if (*v == "top")
        role = FaceRole::top;
      else
        throw config_error("face role must be bottom|lateral|top, got '" + *v + "'",
                           r.last_line());
      tags.role[static_cast<int>(f)] = role;
      seen[static_cast<int>(f)] = true;
    }
    (void)seen;
    tags.validate();
  }

  MeshSpec mesh;
  {
    const char* dirs[3] = {"xi", "eta", "zeta"};
    for (int d = 0; d < 3; ++d) {
      mesh.explicit_knots[d] = r.get_doubles("mesh", std::string(dirs[d]) + "_knots");
      mesh.elements[d] = r.get_int("mesh", std::string(dirs[d]) + "_elements", 0);
      mesh.grading[d] = r.get_double("mesh", std::string(dirs[d]) + "_grading", 1.0);
      mesh.focus[d] = r.get_double("mesh", std::string(dirs[d]) + "_focus", 0.0);
      if (mesh.grading[d] < 1.0)
        throw config_error(std::string("mesh.") + dirs[d] + "_grading must be >= 1");
      if (mesh.focus[d] != 0.0 && mesh.focus[d] != 1.0)
        throw config_error(std::string("mesh.") + dirs[d] + "_focus must be 0 or 1");
    }
    if (auto f = r.get("mesh", "target_face"))
      mesh.target_face = parse_face(*f, r.last_line());
    mesh.target_min_size = r.get_double("mesh", "target_min_size", 0.0);
    if (mesh.target_face && !(mesh.target_min_size > 0.0))
      throw config_error("mesh.target_min_size must be > 0 when mesh.target_face is set");
    mesh.quad_order = r.get_int("mesh", "quad_order", 0);
    mesh.boundary_quad_multiplier = r.get_int("mesh", "boundary_quad_multiplier", 3);
    mesh.elevate_radius = r.get_double("mesh", "elevate_radius", 5e-4);
  }

  SteppingSpec stepping;
  stepping.theta = r.get_double("stepping", "theta", 0.5);
  stepping.dt = r.get_double("stepping", "dt", laser.dt);
  stepping.t_end = r.require_double("stepping", "t_end");
  stepping.solver_tol = r.get_double("stepping", "solver_tol", 1e-10);
  stepping.max_iter = r.get_int("stepping", "max_iter", 5000);
  stepping.substeps = r.get_int("stepping", "substeps", 1);
  if (!(stepping.t_end > 0.0)) throw config_error("stepping.t_end must be > 0");
  if (stepping.theta < 0.0 || stepping.theta > 1.0)
    throw config_error("stepping.theta must be in [0,1]");
  if (!(stepping.dt > 0.0)) throw config_error("stepping.dt must be > 0");
  if (stepping.substeps < 1) throw config_error("stepping.substeps must be >= 1");

  OutputSpec outputs;
  if (auto d = r.get("outputs", "directory")) outputs.directory = *d;
  for (const auto& [value, line] : r.get_all("outputs", "probe")) {
    auto tok = split_ws(value);
    if (tok.size() != 4) throw config_error("probe must read 'name xi eta zeta'", line);
    ProbeSpec p;
    p.name = tok[0];
    for (int c = 0; c < 3; ++c) p.xi[c] = to_double(tok[c + 1], line, "outputs.probe");
    for (int c = 0; c < 3; ++c)
      if (p.xi[c] < 0.0 || p.xi[c] > 1.0)
        throw config_error("probe coordinates must lie in [0,1]^3", line);
    outputs.probes.push_back(std::move(p));
  }
  outputs.probe_interval = r.get_int("outputs", "probe_interval", 1);
  if (outputs.probe_interval < 1) throw config_error("outputs.probe_interval must be >= 1");
  for (const auto& [value, line] : r.get_all("outputs", "field_time"))
    outputs.field_times.push_back(to_double(value, line, "outputs.field_time"));
  {
    auto g = r.get_doubles("outputs", "field_grid");
    if (!g.empty()) {
      if (g.size() != 3) throw config_error("outputs.field_grid must list three integers");
      for (int d = 0; d < 3; ++d) outputs.field_grid[d] = integral(g[d], "outputs.field_grid");
    }
  }
  if (auto f = r.get("outputs", "profile_face"))
    outputs.profile_face = parse_face(*f, r.last_line());
  outputs.profile_samples = r.get_int("outputs", "profile_samples", 400);
  outputs.profile_edge_v = r.get_double("outputs", "profile_edge_v", 1.0);
  for (const auto& [value, line] : r.get_all("outputs", "profile_time"))
    outputs.profile_times.push_back(to_double(value, line, "outputs.profile_time"));
  {
    auto c = r.get_doubles("outputs", "theta_center");
    if (!c.empty()) {
      if (c.size() != 2) throw config_error("outputs.theta_center must read 'x1 x2' (meters)");
      outputs.theta_center = std::array<double, 2>{c[0], c[1]};
    }
  }
  if (!outputs.profile_times.empty() && !outputs.profile_face)
    throw config_error("outputs.profile_face required when profile times are set");
  if (outputs.profile_face &&
      tags.role_of(*outputs.profile_face) != FaceRole::lateral)
    throw config_error("outputs.profile_face must be a lateral face");

  ConvergenceSpec convergence;
  for (const auto& [value, line] : r.get_all("convergence", "level")) {
    auto tok = split_ws(value);
    if (tok.size() != 3)
      throw config_error("convergence level must list three element counts", line);
    std::array<int, 3> lv{};
    for (int c = 0; c < 3; ++c) lv[c] = to_int(tok[c], line, "convergence.level");
    convergence.levels.push_back(lv);
  }
  convergence.eval_time = r.get_double_opt("convergence", "eval_time");
  if (auto p = r.get("convergence", "probe")) convergence.probe = *p;

  SuperposeOptions superpose;
  superpose.cull_exponent = r.get_double("analytic", "cull_exponent", 60.0);

  r.finish();

  return RunConfig{std::move(geometry), mat,      laser,    std::move(scan), tags,
                   std::move(mesh),     stepping, outputs,  convergence,     superpose};
}

}  // namespace thermiga
