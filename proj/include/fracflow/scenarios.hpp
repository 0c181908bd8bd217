#pragma once

#include "fracflow/coupled_mesh.hpp"
#include "fracflow/coupled_solver.hpp"
#include "fracflow/fracture_solvers.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fracflow {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// INI-style configuration: [section] headers, key = value pairs, '#' or ';'
/// comments, blank lines ignored.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& sec, const std::string& key) const;
  std::string get(const std::string& sec, const std::string& key,
                  const std::string& fallback) const;
  std::string require(const std::string& sec, const std::string& key) const;
  double get_num(const std::string& sec, const std::string& key, double fallback) const;
  int get_int(const std::string& sec, const std::string& key, int fallback) const;
  /// Comma- or space-separated list of numbers.
  std::vector<double> get_list(const std::string& sec, const std::string& key) const;

  /// Sorted textual echo (stable across reordering of the input file).
  std::string canonical() const;
  /// FNV-1a hash of the canonical echo, as a hex string.
  std::string hash() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

// ---------------------------------------------------------------------------
// Geometry catalog.

/// Surface z = f(u) over the (u, v) rectangle, with exact derivatives.
SurfacePatch graph_patch(std::function<double(double)> f,
                         std::function<double(double)> fu,
                         std::function<double(double)> fuu, double u0, double u1,
                         double v0 = -1.0, double v1 = 1.0);

ThicknessProfile constant_thickness(double h);

/// Half-circle arch r = <u, v, sqrt(1 - u^2)>, u in [-sqrt(3)/2, sqrt(3)/2],
/// constant thickness two_h; face influx q on both faces.
FractureScenario make_halfcircle(double two_h, double beta, double q);

/// Sine arch r = <u, v, 2 sin u>, u in [0, 2 pi], variable thickness
/// 2h = 0.2 (2 + 0.5 sin 7u); face influx q.
FractureScenario make_sine2(double beta, double q);

/// Tilted plane z = c u over [0, L], constant half thickness h.
FractureScenario make_tilted_plane(double c, double L, double h, double beta,
                                   double q);

/// Flat fracture z = 0 over [0, L].
FractureScenario make_flat(double L, double h, double beta, double q);

/// Reservoir [-10,20]x[-10,10], square well of side 0.5 rotated 60 degrees,
/// one sine fracture anchored at the center of the top-right well face;
/// thickness 2h = H (2 + 0.5 sin 7u).
ReservoirScenario make_coupled_ex6(double H, double beta);

/// Reservoir [-15,15]x[-10,10], rectangular well 20 x 0.5, three identical
/// rotated sine fractures anchored on the well faces.
ReservoirScenario make_coupled_ex7(double H, double beta);

/// Thickness-convergence geometry: axis-aligned square well of side 0.5 at
/// the origin, one flat fracture y = 2 spanning the reservoir width,
/// constant half thickness H, Darcy flow.
ReservoirScenario make_coupled_study(double H);

bool is_coupled_geometry(const std::string& name);
bool is_fracture_geometry(const std::string& name);

// ---------------------------------------------------------------------------
// Command backends (used by the CLI). Return process exit codes:
// 0 success, 2 configuration/schema error, 3 solver failure, 4 I/O failure.

std::string default_out_root();  // $FRACFLOW_OUT_ROOT or "."

struct CommandResult {
  int exit_code = 0;
  std::string message;
  std::vector<std::string> files;
};

CommandResult cmd_run(const std::string& config_path,
                      const std::string& out_dir_override = "", int threads = 1,
                      std::optional<double> tol = std::nullopt);

CommandResult cmd_sweep(const std::string& config_path,
                        const std::string& out_dir_override = "", int threads = 1,
                        std::optional<double> tol = std::nullopt);

CommandResult cmd_compare(const std::vector<std::string>& run_dirs,
                          const std::string& out_dir_override = "");

}  // namespace fracflow
