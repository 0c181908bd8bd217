#include "fracflow/scenarios.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace fracflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": malformed section header");
      }
      section = trim(t.substr(1, t.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos || section.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value' inside a [section]");
    }
    const std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    // Strip an inline comment introduced by whitespace + '#' or ';'.
    for (size_t i = 0; i < val.size(); ++i) {
      if ((val[i] == '#' || val[i] == ';') &&
          (i == 0 || std::isspace(static_cast<unsigned char>(val[i - 1])))) {
        val = trim(val.substr(0, i));
        break;
      }
    }
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    cfg.sections_[section][key] = val;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

bool Config::has(const std::string& sec, const std::string& key) const {
  const auto s = sections_.find(sec);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string Config::get(const std::string& sec, const std::string& key,
                        const std::string& fallback) const {
  const auto s = sections_.find(sec);
  if (s == sections_.end()) return fallback;
  const auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

std::string Config::require(const std::string& sec, const std::string& key) const {
  if (!has(sec, key)) {
    throw ConfigError("missing required config key [" + sec + "] " + key);
  }
  return sections_.at(sec).at(key);
}

namespace {
double parse_num(const std::string& sec, const std::string& key,
                 const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || trim(end)[0] != '\0') {
    throw ConfigError("config key [" + sec + "] " + key + ": not a number: " + v);
  }
  return x;
}
}  // namespace

double Config::get_num(const std::string& sec, const std::string& key,
                       double fallback) const {
  if (!has(sec, key)) return fallback;
  return parse_num(sec, key, sections_.at(sec).at(key));
}

int Config::get_int(const std::string& sec, const std::string& key,
                    int fallback) const {
  const double x = get_num(sec, key, fallback);
  const int i = static_cast<int>(std::llround(x));
  if (std::abs(x - i) > 1e-12) {
    throw ConfigError("config key [" + sec + "] " + key + ": expected an integer");
  }
  return i;
}

std::vector<double> Config::get_list(const std::string& sec,
                                     const std::string& key) const {
  std::vector<double> out;
  if (!has(sec, key)) return out;
  std::string v = sections_.at(sec).at(key);
  for (char& c : v) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(v);
  std::string tok;
  while (in >> tok) out.push_back(parse_num(sec, key, tok));
  return out;
}

std::string Config::canonical() const {
  std::ostringstream os;
  for (const auto& [sec, kv] : sections_) {
    os << '[' << sec << "]\n";
    for (const auto& [k, v] : kv) os << k << '=' << v << '\n';
  }
  return os.str();
}

std::string Config::hash() const {
  const std::string text = canonical();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Catalog

SurfacePatch graph_patch(std::function<double(double)> f,
                         std::function<double(double)> fu,
                         std::function<double(double)> fuu, double u0, double u1,
                         double v0, double v1) {
  SurfacePatch p;
  p.u0 = u0;
  p.u1 = u1;
  p.v0 = v0;
  p.v1 = v1;
  p.r = [f](double u, double v) { return Vec3(u, v, f(u)); };
  p.r_u = [fu](double u, double) { return Vec3(1.0, 0.0, fu(u)); };
  p.r_v = [](double, double) { return Vec3(0.0, 1.0, 0.0); };
  p.r_uu = [fuu](double u, double) { return Vec3(0.0, 0.0, fuu(u)); };
  p.r_uv = [](double, double) { return Vec3(0.0, 0.0, 0.0); };
  p.r_vv = [](double, double) { return Vec3(0.0, 0.0, 0.0); };
  return p;
}

ThicknessProfile constant_thickness(double h) {
  ThicknessProfile t;
  t.h = [h](double, double) { return h; };
  t.h_u = [](double, double) { return 0.0; };
  t.h_v = [](double, double) { return 0.0; };
  return t;
}

namespace {

ThicknessProfile sine_thickness(double H) {
  // 2h(u) = H (2 + 0.5 sin 7u)  =>  h = H (1 + 0.25 sin 7u).
  ThicknessProfile t;
  t.h = [H](double u, double) { return H * (1.0 + 0.25 * std::sin(7.0 * u)); };
  t.h_u = [H](double u, double) { return H * 1.75 * std::cos(7.0 * u); };
  t.h_v = [](double, double) { return 0.0; };
  return t;
}

SurfacePatch sine_arch_patch() {
  return graph_patch([](double u) { return 2.0 * std::sin(u); },
                     [](double u) { return 2.0 * std::cos(u); },
                     [](double u) { return -2.0 * std::sin(u); }, 0.0, 2.0 * kPi);
}

FluidParams fracture_defaults(double beta) {
  FluidParams p;
  p.alpha = 1.0;
  p.beta = beta;
  p.Q = 1.0;
  p.omega_vol = 600.0;
  p.k_p = 0.01;
  p.k_f = 1.0;
  return p;
}

std::function<double(double)> const_fn(double q) {
  return [q](double) { return q; };
}

}  // namespace

FractureScenario make_halfcircle(double two_h, double beta, double q) {
  FractureScenario scn;
  const double b = std::sqrt(3.0) / 2.0;
  scn.patch = graph_patch(
      [](double u) { return std::sqrt(1.0 - u * u); },
      [](double u) { return -u / std::sqrt(1.0 - u * u); },
      [](double u) { return -1.0 / std::pow(1.0 - u * u, 1.5); }, -b, b);
  scn.thickness = constant_thickness(0.5 * two_h);
  scn.params = fracture_defaults(beta);
  scn.q_plus = const_fn(q);
  scn.q_minus = const_fn(q);
  return scn;
}

FractureScenario make_sine2(double beta, double q) {
  FractureScenario scn;
  scn.patch = sine_arch_patch();
  scn.thickness = sine_thickness(0.2);
  scn.params = fracture_defaults(beta);
  scn.q_plus = const_fn(q);
  scn.q_minus = const_fn(q);
  return scn;
}

FractureScenario make_tilted_plane(double c, double L, double h, double beta,
                                   double q) {
  FractureScenario scn;
  scn.patch = graph_patch([c](double u) { return c * u; },
                          [c](double) { return c; }, [](double) { return 0.0; },
                          0.0, L);
  scn.thickness = constant_thickness(h);
  scn.params = fracture_defaults(beta);
  scn.q_plus = const_fn(q);
  scn.q_minus = const_fn(q);
  return scn;
}

FractureScenario make_flat(double L, double h, double beta, double q) {
  return make_tilted_plane(0.0, L, h, beta, q);
}

namespace {

FluidParams coupled_defaults(double beta) {
  FluidParams p;
  p.beta = beta;
  p.Q = 1.0;
  p.k_p = 0.01;
  p.k_f = 1.0;
  p.alpha = 1.0;  // fracture alpha is 1/k_f, applied by the solver
  return p;
}

FractureDescriptor sine_fracture(double anchor_t, double sign_u, double offset_F,
                                 double sign_F, const ThicknessProfile& th) {
  // Station parameter t; surface coordinate u = sign_u * (t - anchor_t);
  // band center F(t) = offset_F + sign_F * 2 sin(u(t)).
  FractureDescriptor fd;
  fd.u_of_t = [anchor_t, sign_u](double t) { return sign_u * (t - anchor_t); };
  fd.F = [anchor_t, sign_u, offset_F, sign_F](double t) {
    return offset_F + sign_F * 2.0 * std::sin(sign_u * (t - anchor_t));
  };
  fd.dF = [anchor_t, sign_u, offset_F, sign_F](double t) {
    return sign_F * sign_u * 2.0 * std::cos(sign_u * (t - anchor_t));
  };
  if (sign_u > 0) {
    fd.t0 = anchor_t;
    fd.t1 = anchor_t + 2.0 * kPi;
  } else {
    fd.t0 = anchor_t - 2.0 * kPi;
    fd.t1 = anchor_t;
  }
  fd.patch = sine_arch_patch();
  fd.thickness = th;
  return fd;
}

}  // namespace

ReservoirScenario make_coupled_ex6(double H, double beta) {
  ReservoirScenario scn;
  scn.x0 = -10;
  scn.x1 = 20;
  scn.y0 = -10;
  scn.y1 = 10;
  scn.graph_axis = 0;
  scn.params = coupled_defaults(beta);

  const double c60 = 0.5, s60 = std::sqrt(3.0) / 2.0;
  auto rot = [&](double x, double y) {
    return Eigen::Vector2d(c60 * x - s60 * y, s60 * x + c60 * y);
  };
  scn.well = {rot(0.25, -0.25), rot(0.25, 0.25), rot(-0.25, 0.25),
              rot(-0.25, -0.25)};

  // Fracture anchored at the center of the top-right well face (1/8, sqrt3/8).
  FractureDescriptor fd =
      sine_fracture(0.125, 1.0, std::sqrt(3.0) / 8.0, 1.0, sine_thickness(H));
  scn.fractures.push_back(std::move(fd));
  return scn;
}

ReservoirScenario make_coupled_ex7(double H, double beta) {
  ReservoirScenario scn;
  scn.x0 = -15;
  scn.x1 = 15;
  scn.y0 = -10;
  scn.y1 = 10;
  scn.graph_axis = 1;  // fractures are graphs x = F(y)
  scn.params = coupled_defaults(beta);
  scn.well = {{10, -0.25}, {10, 0.25}, {-10, 0.25}, {-10, -0.25}};

  const ThicknessProfile th = sine_thickness(H);
  // Upward fracture from (0, 0.25): x = -2 sin(y - 0.25).
  scn.fractures.push_back(sine_fracture(0.25, 1.0, 0.0, -1.0, th));
  // Downward fractures from (-5, -0.25) and (5, -0.25): x = -/+5 +/- 2 sin(u),
  // with u = -(y + 0.25).
  scn.fractures.push_back(sine_fracture(-0.25, -1.0, -5.0, 1.0, th));
  scn.fractures.push_back(sine_fracture(-0.25, -1.0, 5.0, -1.0, th));
  return scn;
}

ReservoirScenario make_coupled_study(double H) {
  ReservoirScenario scn;
  scn.x0 = -10;
  scn.x1 = 20;
  scn.y0 = -10;
  scn.y1 = 10;
  scn.graph_axis = 0;
  scn.params = coupled_defaults(0.0);
  scn.well = {{0.25, -0.25}, {0.25, 0.25}, {-0.25, 0.25}, {-0.25, -0.25}};
  // Flat through-going fracture y = 2 spanning the whole reservoir width.
  // No tips and no well junction, so the interface flux density stays
  // bounded as the thickness shrinks and the difference study measures the
  // model gap rather than a corner singularity.
  FractureDescriptor fd;
  fd.t0 = scn.x0;
  fd.t1 = scn.x1;
  fd.F = [](double) { return 2.0; };
  fd.dF = [](double) { return 0.0; };
  const double t0 = scn.x0;
  fd.u_of_t = [t0](double t) { return t - t0; };
  fd.patch = graph_patch([](double) { return 0.0; }, [](double) { return 0.0; },
                         [](double) { return 0.0; }, 0.0, scn.x1 - scn.x0);
  fd.thickness = constant_thickness(H);
  scn.fractures.push_back(std::move(fd));
  return scn;
}

bool is_coupled_geometry(const std::string& name) {
  return name == "coupled_ex6" || name == "coupled_ex7" || name == "coupled_study";
}

bool is_fracture_geometry(const std::string& name) {
  return name == "halfcircle" || name == "sine2" || name == "tilted_plane" ||
         name == "flat";
}

// ---------------------------------------------------------------------------
// Command backends

std::string default_out_root() {
  const char* env = std::getenv("FRACFLOW_OUT_ROOT");
  return env && *env ? env : ".";
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  for (size_t i = 0; i < header.size(); ++i) {
    os << header[i] << (i + 1 < header.size() ? "," : "");
  }
  os << '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      os << row[i] << (i + 1 < row.size() ? "," : "");
    }
    os << '\n';
  }
  write_text(path, os.str());
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (first) {
      t.header = cells;
      first = false;
    } else {
      t.rows.push_back(cells);
    }
  }
  return t;
}

PicardConfig solver_config(const Config& cfg, std::optional<double> tol) {
  PicardConfig pc;
  pc.rel_tol = cfg.get_num("solver", "rel_tol", 1e-8);
  pc.max_iter = cfg.get_int("solver", "max_iter", 200);
  pc.relaxation = cfg.get_num("solver", "relaxation", 1.0);
  if (tol) pc.rel_tol = *tol;
  if (!(pc.rel_tol > 0.0) || pc.rel_tol >= 1.0 || pc.max_iter < 1 ||
      !(pc.relaxation > 0.0) || pc.relaxation > 1.0) {
    throw ConfigError("invalid [solver] settings");
  }
  return pc;
}

MeshControls mesh_controls(const Config& cfg) {
  MeshControls ctl;
  ctl.target_spacing = cfg.get_num("mesh", "spacing", 0.25);
  ctl.n_across = cfg.get_int("mesh", "n_across", 4);
  ctl.well_refine = cfg.get_num("mesh", "well_refine", 4.0);
  ctl.well_margin = cfg.get_num("mesh", "well_margin", 1.0);
  ctl.snap_tol = cfg.get_num("mesh", "snap_tol", 0.08);
  if (!(ctl.target_spacing > 0.0) || ctl.n_across < 2 || ctl.n_across % 2 != 0 ||
      !(ctl.well_refine >= 1.0) || !(ctl.snap_tol >= 0.0)) {
    throw ConfigError("invalid [mesh] settings");
  }
  return ctl;
}

FractureScenario fracture_from_config(const Config& cfg, const std::string& name) {
  const double beta = cfg.get_num("fluid", "beta", 0.0);
  const double q = cfg.get_num("geometry", "q", 10.0);
  FractureScenario scn;
  if (name == "halfcircle") {
    scn = make_halfcircle(cfg.get_num("geometry", "two_h", 0.025), beta, q);
  } else if (name == "sine2") {
    scn = make_sine2(beta, q);
  } else if (name == "tilted_plane") {
    scn = make_tilted_plane(cfg.get_num("geometry", "c", 0.5),
                            cfg.get_num("geometry", "L", 1.0),
                            cfg.get_num("geometry", "h", 0.05), beta, q);
  } else if (name == "flat") {
    scn = make_flat(cfg.get_num("geometry", "L", 1.0),
                    cfg.get_num("geometry", "h", 0.05), beta, q);
  } else {
    throw ConfigError("unknown fracture geometry: " + name);
  }
  scn.params.alpha = cfg.get_num("fluid", "alpha", scn.params.alpha);
  scn.params.Q = cfg.get_num("fluid", "Q", scn.params.Q);
  scn.params.omega_vol = cfg.get_num("fluid", "omega_vol", scn.params.omega_vol);
  scn.params.k_f = cfg.get_num("fluid", "k_f", scn.params.k_f);
  scn.params.k_p = cfg.get_num("fluid", "k_p", scn.params.k_p);
  if (cfg.get("geometry", "qtilde_eval", "boundary") == "midplane") {
    scn.qtilde_eval = QTildeEval::AtMidplane;
  }
  return scn;
}

ReservoirScenario reservoir_from_config(const Config& cfg, const std::string& name,
                                        double H, double beta) {
  ReservoirScenario scn;
  if (name == "coupled_ex6") {
    scn = make_coupled_ex6(H, beta);
  } else if (name == "coupled_ex7") {
    scn = make_coupled_ex7(H, beta);
  } else if (name == "coupled_study") {
    scn = make_coupled_study(H);
  } else {
    throw ConfigError("unknown coupled geometry: " + name);
  }
  scn.params.Q = cfg.get_num("fluid", "Q", scn.params.Q);
  scn.params.k_f = cfg.get_num("fluid", "k_f", scn.params.k_f);
  scn.params.k_p = cfg.get_num("fluid", "k_p", scn.params.k_p);
  return scn;
}

std::string geometry_signature(const Config& cfg) {
  std::ostringstream os;
  os << cfg.require("geometry", "name");
  for (const char* key : {"two_h", "c", "L", "h", "q", "H"}) {
    if (cfg.has("geometry", key)) {
      os << ' ' << key << '=' << fmt(cfg.get_num("geometry", key, 0.0));
    }
  }
  os << " beta=" << fmt(cfg.get_num("fluid", "beta", 0.0));
  return os.str();
}

fs::path resolve_out_dir(const Config& cfg, const std::string& override_dir) {
  if (!override_dir.empty()) return override_dir;
  const std::string sub = cfg.get("output", "dir", "");
  fs::path root = default_out_root();
  return sub.empty() ? root / ("run_" + cfg.hash()) : root / sub;
}

json stats_json(const PicardStats& st) {
  return json{{"iterations", st.iterations},
              {"final_residual", st.final_residual},
              {"final_update", st.final_update}};
}

struct PiCell {
  double H = 0.0, beta = 0.0;
  double pi_pd = 0.0, pi_r1 = 0.0, rel_error = 0.0;
  int iter_pd = 0, iter_r1 = 0;
  bool failed = false;
  std::string error;
};

PiCell run_pi_cell(const Config& cfg, const std::string& name, double H,
                   double beta, const MeshControls& ctl, const PicardConfig& pc) {
  PiCell cell;
  cell.H = H;
  cell.beta = beta;
  try {
    const ReservoirScenario scn = reservoir_from_config(cfg, name, H, beta);
    const CoupledMesh mesh = build_coupled_mesh(scn, ctl);
    const CoupledSolution pd = solve_coupled_original(scn, mesh, pc);
    const CoupledSolution r1 = solve_coupled_reduced(scn, mesh, pc);
    cell.pi_pd = diffusive_capacity(pd, scn);
    cell.pi_r1 = diffusive_capacity(r1, scn);
    cell.rel_error = std::abs(cell.pi_pd - cell.pi_r1) / cell.pi_pd;
    cell.iter_pd = pd.stats.iterations;
    cell.iter_r1 = r1.stats.iterations;
  } catch (const std::exception& e) {
    cell.failed = true;
    cell.error = e.what();
  }
  return cell;
}

void run_fracture(const Config& cfg, const std::string& name, const fs::path& dir,
                  std::optional<double> tol, CommandResult& res, json& manifest) {
  const FractureScenario scn = fracture_from_config(cfg, name);
  const int n_u = cfg.get_int("mesh", "n_u", 400);
  const int n_lambda = cfg.get_int("mesh", "n_lambda", 16);
  if (n_u < 4 || n_lambda < 2) throw ConfigError("invalid [mesh] n_u / n_lambda");
  const PicardConfig pc = solver_config(cfg, tol);

  const Grid1D g1 = Grid1D::uniform(scn.u0(), scn.u1(), n_u);
  const Grid2D g2 = Grid2D::mapped(
      g1.nodes, n_lambda,
      [&scn](double u) { return scn.thickness.h(u, scn.v_mid()); });

  const FractureSolution2D orig = solve_original(scn, g2, pc);
  const FractureSolution1D red1 = solve_reduced_I(scn, g1, pc);
  const FractureSolution1D red2 = solve_reduced_II(scn, g1, pc);
  const FractureComparison c1 = compare_fracture_solutions(scn, orig.W, red1.W);
  const FractureComparison c2 = compare_fracture_solutions(scn, orig.W, red2.W);

  std::vector<std::vector<std::string>> rows;
  for (double u : g1.nodes) rows.push_back({fmt(u), fmt(orig.W.value(u, 0.0))});
  write_csv((dir / "profile_original.csv").string(), {"u", "W"}, rows);
  rows.clear();
  for (double u : g1.nodes) rows.push_back({fmt(u), fmt(red1.W.value(u))});
  write_csv((dir / "profile_reduced1.csv").string(), {"u", "W"}, rows);
  rows.clear();
  for (double u : g1.nodes) rows.push_back({fmt(u), fmt(red2.W.value(u))});
  write_csv((dir / "profile_reduced2.csv").string(), {"u", "W"}, rows);
  res.files = {"profile_original.csv", "profile_reduced1.csv",
               "profile_reduced2.csv", "manifest.json"};

  manifest["mesh"] = {{"n_u", n_u}, {"n_lambda", n_lambda}};
  manifest["solves"] = {{"original", stats_json(orig.stats)},
                        {"reduced1", stats_json(red1.stats)},
                        {"reduced2", stats_json(red2.stats)}};
  manifest["comparison"] = {
      {"reduced1",
       {{"l32_grad_u_diff", c1.l32_grad_u_diff},
        {"l32_W_lambda", c1.l32_W_lambda},
        {"max_rel_diff_on_line", c1.max_rel_diff_on_line}}},
      {"reduced2",
       {{"l32_grad_u_diff", c2.l32_grad_u_diff},
        {"l32_W_lambda", c2.l32_W_lambda},
        {"max_rel_diff_on_line", c2.max_rel_diff_on_line}}}};
}

void run_coupled(const Config& cfg, const std::string& name, const fs::path& dir,
                 std::optional<double> tol, CommandResult& res, json& manifest) {
  const double H = cfg.get_num("geometry", "H", 0.1);
  const double beta = cfg.get_num("fluid", "beta", 0.0);
  const MeshControls ctl = mesh_controls(cfg);
  const PicardConfig pc = solver_config(cfg, tol);

  const ReservoirScenario scn = reservoir_from_config(cfg, name, H, beta);
  const CoupledMesh mesh = build_coupled_mesh(scn, ctl);
  const CoupledSolution pd = solve_coupled_original(scn, mesh, pc);
  const CoupledSolution r1 = solve_coupled_reduced(scn, mesh, pc);
  const double pi_pd = diffusive_capacity(pd, scn);
  const double pi_r1 = diffusive_capacity(r1, scn);

  auto field_rows = [&](const VectorXd& W) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(mesh.num_nodes());
    for (int v = 0; v < mesh.num_nodes(); ++v) {
      rows.push_back({fmt(mesh.nodes[v].x()), fmt(mesh.nodes[v].y()), fmt(W[v])});
    }
    return rows;
  };
  write_csv((dir / "field_pd.csv").string(), {"x", "z", "W"}, field_rows(pd.W));
  write_csv((dir / "field_r1.csv").string(), {"x", "z", "W"}, field_rows(r1.W));

  auto line_rows = [&](const VectorXd& W) {
    std::vector<std::vector<std::string>> rows;
    for (size_t k = 0; k < mesh.lines.size(); ++k) {
      const auto& line = mesh.lines[k];
      for (size_t i = 0; i < line.nodes.size(); ++i) {
        rows.push_back(
            {std::to_string(k), fmt(line.u[i]), fmt(W[line.nodes[i]])});
      }
    }
    return rows;
  };
  write_csv((dir / "profile_pd.csv").string(), {"fracture", "u", "W"},
            line_rows(pd.W));
  write_csv((dir / "profile_r1.csv").string(), {"fracture", "u", "W"},
            line_rows(r1.W));

  write_csv((dir / "pi.csv").string(),
            {"H", "beta", "PI_PD", "PI_R1", "rel_error"},
            {{fmt(H), fmt(beta), fmt(pi_pd), fmt(pi_r1),
              fmt(std::abs(pi_pd - pi_r1) / pi_pd)}});
  res.files = {"field_pd.csv", "field_r1.csv", "profile_pd.csv",
               "profile_r1.csv",  "pi.csv",      "manifest.json"};

  manifest["mesh"] = {{"nodes", mesh.num_nodes()},
                      {"triangles", mesh.num_tris()},
                      {"spacing", ctl.target_spacing}};
  manifest["solves"] = {{"pd", stats_json(pd.stats)},
                        {"r1", stats_json(r1.stats)}};
  manifest["pi"] = {{"PI_PD", pi_pd}, {"PI_R1", pi_r1}};
}

}  // namespace

CommandResult cmd_run(const std::string& config_path,
                      const std::string& out_dir_override, int /*threads*/,
                      std::optional<double> tol) {
  CommandResult res;
  Config cfg;
  std::string name;
  try {
    cfg = Config::parse_file(config_path);
    name = cfg.require("geometry", "name");
    if (!is_coupled_geometry(name) && !is_fracture_geometry(name)) {
      throw ConfigError("unknown geometry: " + name);
    }
    // Validate eagerly so that schema errors produce no partial outputs.
    solver_config(cfg, tol);
    if (is_coupled_geometry(name)) {
      mesh_controls(cfg);
      reservoir_from_config(cfg, name, cfg.get_num("geometry", "H", 0.1),
                            cfg.get_num("fluid", "beta", 0.0));
    } else {
      fracture_from_config(cfg, name);
      if (cfg.get_int("mesh", "n_u", 400) < 4 ||
          cfg.get_int("mesh", "n_lambda", 16) < 2) {
        throw ConfigError("invalid [mesh] n_u / n_lambda");
      }
    }
  } catch (const ConfigError& e) {
    res.exit_code = 2;
    res.message = e.what();
    return res;
  } catch (const IoError& e) {
    res.exit_code = 4;
    res.message = e.what();
    return res;
  }

  try {
    const fs::path dir = resolve_out_dir(cfg, out_dir_override);
    fs::create_directories(dir);
    json manifest;
    manifest["command"] = "run";
    manifest["config_hash"] = cfg.hash();
    manifest["config"] = cfg.canonical();
    manifest["geometry"] = name;
    manifest["geometry_signature"] = geometry_signature(cfg);
    if (is_coupled_geometry(name)) {
      run_coupled(cfg, name, dir, tol, res, manifest);
    } else {
      run_fracture(cfg, name, dir, tol, res, manifest);
    }
    write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    res.message = "wrote " + dir.string();
  } catch (const IoError& e) {
    res.exit_code = 4;
    res.message = e.what();
  } catch (const fs::filesystem_error& e) {
    res.exit_code = 4;
    res.message = e.what();
  } catch (const std::exception& e) {
    res.exit_code = 3;
    res.message = e.what();
  }
  return res;
}

CommandResult cmd_sweep(const std::string& config_path,
                        const std::string& out_dir_override, int threads,
                        std::optional<double> tol) {
  CommandResult res;
  Config cfg;
  std::string name;
  std::vector<double> Hs, betas, h_list;
  try {
    cfg = Config::parse_file(config_path);
    name = cfg.require("geometry", "name");
    if (!is_coupled_geometry(name)) {
      throw ConfigError("sweep requires a coupled geometry");
    }
    Hs = cfg.get_list("sweep", "H");
    betas = cfg.get_list("sweep", "beta");
    h_list = cfg.get_list("sweep", "h_list");
    if ((Hs.empty() || betas.empty()) && h_list.empty()) {
      throw ConfigError("sweep needs non-empty [sweep] H and beta lists, "
                        "or an h_list for a thickness study");
    }
    mesh_controls(cfg);
    solver_config(cfg, tol);
  } catch (const ConfigError& e) {
    res.exit_code = 2;
    res.message = e.what();
    return res;
  } catch (const IoError& e) {
    res.exit_code = 4;
    res.message = e.what();
    return res;
  }

  try {
    const fs::path dir = resolve_out_dir(cfg, out_dir_override);
    fs::create_directories(dir);
    const MeshControls ctl = mesh_controls(cfg);
    const PicardConfig pc = solver_config(cfg, tol);

    json manifest;
    manifest["command"] = "sweep";
    manifest["config_hash"] = cfg.hash();
    manifest["config"] = cfg.canonical();
    manifest["geometry"] = name;
    manifest["geometry_signature"] = geometry_signature(cfg);

    bool any_failed = false;
    if (!Hs.empty() && !betas.empty()) {
      std::vector<std::pair<double, double>> cells;
      for (double H : Hs) {
        for (double b : betas) cells.emplace_back(H, b);
      }
      std::sort(cells.begin(), cells.end());
      std::vector<PiCell> out(cells.size());
      std::atomic<size_t> next{0};
      const int nthreads = std::max(1, threads);
      std::vector<std::thread> pool;
      for (int w = 0; w < nthreads; ++w) {
        pool.emplace_back([&]() {
          for (size_t i = next.fetch_add(1); i < cells.size();
               i = next.fetch_add(1)) {
            out[i] = run_pi_cell(cfg, name, cells[i].first, cells[i].second, ctl,
                                 pc);
          }
        });
      }
      for (auto& th : pool) th.join();

      std::vector<std::vector<std::string>> rows;
      json jcells = json::array();
      for (const PiCell& c : out) {
        any_failed = any_failed || c.failed;
        if (c.failed) {
          rows.push_back({fmt(c.H), fmt(c.beta), "FAILED", "FAILED", "FAILED",
                          "FAILED"});
        } else {
          rows.push_back({fmt(c.H), fmt(c.beta), fmt(c.pi_pd), fmt(c.pi_r1),
                          fmt(c.rel_error), "OK"});
        }
        jcells.push_back(json{{"H", c.H},
                              {"beta", c.beta},
                              {"failed", c.failed},
                              {"error", c.error},
                              {"iterations_pd", c.iter_pd},
                              {"iterations_r1", c.iter_r1}});
      }
      write_csv((dir / "pi_table.csv").string(),
                {"H", "beta", "PI_PD", "PI_R1", "rel_error", "status"}, rows);
      manifest["cells"] = jcells;
      res.files.push_back("pi_table.csv");
    }

    if (!h_list.empty()) {
      auto make_scn = [&](double H) {
        return reservoir_from_config(cfg, name, H,
                                     cfg.get_num("fluid", "beta", 0.0));
      };
      const DifferenceStudy study =
          coupled_difference_study(make_scn, h_list, ctl, pc);
      std::vector<std::vector<std::string>> rows;
      for (const auto& row : study.rows) {
        rows.push_back({fmt(row.H), fmt(row.diff_grad_sq),
                        fmt(row.max_qbar_over_h), std::to_string(row.picard_pd),
                        std::to_string(row.picard_r1)});
      }
      write_csv((dir / "study.csv").string(),
                {"H", "diff_grad_sq", "max_qbar_over_h", "picard_pd",
                 "picard_r1"},
                rows);
      write_csv((dir / "study_fit.csv").string(), {"slope"},
                {{fmt(study.slope)}});
      manifest["study_slope"] = study.slope;
      res.files.push_back("study.csv");
      res.files.push_back("study_fit.csv");
    }

    write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    res.files.push_back("manifest.json");
    res.message = "wrote " + dir.string();
    if (any_failed) {
      res.exit_code = 3;
      res.message += " (some sweep cells failed)";
    }
  } catch (const IoError& e) {
    res.exit_code = 4;
    res.message = e.what();
  } catch (const fs::filesystem_error& e) {
    res.exit_code = 4;
    res.message = e.what();
  } catch (const std::exception& e) {
    res.exit_code = 3;
    res.message = e.what();
  }
  return res;
}

CommandResult cmd_compare(const std::vector<std::string>& run_dirs,
                          const std::string& out_dir_override) {
  CommandResult res;
  try {
    if (run_dirs.size() < 2) {
      throw ConfigError("compare needs at least two run directories");
    }
    std::vector<json> manifests;
    for (const auto& d : run_dirs) {
      std::ifstream in(fs::path(d) / "manifest.json");
      if (!in) throw IoError("missing manifest.json in " + d);
      json m;
      in >> m;
      manifests.push_back(std::move(m));
    }
    const std::string sig = manifests[0].value("geometry_signature", "");
    for (const auto& m : manifests) {
      if (m.value("geometry_signature", "") != sig) {
        throw ConfigError("compare: runs use different scenarios");
      }
    }

    const fs::path dir =
        out_dir_override.empty() ? fs::path(run_dirs[0]) : fs::path(out_dir_override);
    fs::create_directories(dir);

    std::ostringstream report;
    report << "comparison of " << run_dirs.size() << " runs, scenario: " << sig
           << "\n";

    const bool coupled =
        fs::exists(fs::path(run_dirs[0]) / "pi.csv");
    if (coupled) {
      std::vector<std::vector<std::string>> rows;
      double pi0 = 0.0;
      for (size_t d = 0; d < run_dirs.size(); ++d) {
        const CsvTable t = read_csv((fs::path(run_dirs[d]) / "pi.csv").string());
        const double pd = std::stod(t.rows.at(0).at(2));
        const double r1 = std::stod(t.rows.at(0).at(3));
        if (d == 0) pi0 = pd;
        rows.push_back({run_dirs[d], fmt(pd), fmt(r1),
                        fmt(std::abs(pd - pi0) / std::abs(pi0))});
      }
      write_csv((dir / "pi_compare.csv").string(),
                {"run", "PI_PD", "PI_R1", "rel_diff_PD_vs_first"}, rows);
      res.files.push_back("pi_compare.csv");
    } else {
      // Line-profile comparison across all profile_*.csv files of all runs.
      struct Column {
        std::string label;
        std::vector<double> u, W;
      };
      std::vector<Column> cols;
      for (size_t d = 0; d < run_dirs.size(); ++d) {
        for (const char* f :
             {"profile_original.csv", "profile_reduced1.csv",
              "profile_reduced2.csv"}) {
          const fs::path p = fs::path(run_dirs[d]) / f;
          if (!fs::exists(p)) continue;
          const CsvTable t = read_csv(p.string());
          Column c;
          c.label = "run" + std::to_string(d) + "_" +
                    fs::path(f).stem().string().substr(8);
          for (const auto& row : t.rows) {
            c.u.push_back(std::stod(row.at(0)));
            c.W.push_back(std::stod(row.at(1)));
          }
          cols.push_back(std::move(c));
        }
      }
      if (cols.empty()) throw ConfigError("compare: no profile CSVs found");
      for (const auto& c : cols) {
        if (c.u.size() != cols[0].u.size()) {
          throw ConfigError("compare: runs use different grids");
        }
      }
      const Column& ref = cols[0];
      double ref_max = 0.0;
      for (double w : ref.W) ref_max = std::max(ref_max, std::abs(w));

      std::vector<std::string> header{"u", ref.label};
      for (size_t c = 1; c < cols.size(); ++c) {
        header.push_back(cols[c].label);
        header.push_back("rel_diff_" + cols[c].label);
      }
      std::vector<std::vector<std::string>> rows;
      std::vector<double> max_rel(cols.size(), 0.0);
      for (size_t i = 0; i < ref.u.size(); ++i) {
        std::vector<std::string> row{fmt(ref.u[i]), fmt(ref.W[i])};
        for (size_t c = 1; c < cols.size(); ++c) {
          const double rd =
              ref_max > 0.0 ? std::abs(cols[c].W[i] - ref.W[i]) / ref_max : 0.0;
          max_rel[c] = std::max(max_rel[c], rd);
          row.push_back(fmt(cols[c].W[i]));
          row.push_back(fmt(rd));
        }
        rows.push_back(std::move(row));
      }
      write_csv((dir / "comparison.csv").string(), header, rows);
      res.files.push_back("comparison.csv");
      for (size_t c = 1; c < cols.size(); ++c) {
        report << "max relative difference " << cols[c].label << " vs "
               << ref.label << ": " << fmt(max_rel[c]) << "\n";
      }
      for (size_t d = 0; d < run_dirs.size(); ++d) {
        if (manifests[d].contains("comparison")) {
          report << "run" << d
                 << " norms: " << manifests[d]["comparison"].dump() << "\n";
        }
      }
    }
    write_text((dir / "report.txt").string(), report.str());
    res.files.push_back("report.txt");
    res.message = "wrote " + dir.string();
  } catch (const ConfigError& e) {
    res.exit_code = 2;
    res.message = e.what();
  } catch (const IoError& e) {
    res.exit_code = 4;
    res.message = e.what();
  } catch (const fs::filesystem_error& e) {
    res.exit_code = 4;
    res.message = e.what();
  } catch (const std::exception& e) {
    res.exit_code = 3;
    res.message = e.what();
  }
  return res;
}

}  // namespace fracflow
