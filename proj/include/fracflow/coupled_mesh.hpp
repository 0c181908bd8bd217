#pragma once

#include "fracflow/flowlaw.hpp"
#include "fracflow/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace fracflow {

/// A fracture embedded in the reservoir cross-section as the graph
/// value = F(station) over the mesh's station axis, together with the
/// v-invariant surface whose metric drives the reduced line coefficients.
struct FractureDescriptor {
  std::function<double(double)> F;     // band center value at station t
  std::function<double(double)> dF;    // dF/dt
  double t0 = 0.0, t1 = 0.0;           // station extent of the fracture
  std::function<double(double)> u_of_t;  // surface coordinate u(t), |du/dt| = 1
  SurfacePatch patch;
  ThicknessProfile thickness;  // half thickness h(u)

  double h_at(double t) const {
    const double u = u_of_t(t);
    return thickness.h(u, 0.0);
  }
  /// Vertical half-extent of the strip band in the value direction.
  double band_half(double t) const {
    const double tc = std::clamp(t, t0, t1);
    const double fp = dF(tc);
    return h_at(tc) * std::sqrt(1.0 + fp * fp);
  }
  double center(double t) const { return F(std::clamp(t, t0, t1)); }
};

/// Reservoir cross-section: rectangle, well polygon, fractures that are all
/// graphs over the same axis (0: value = y over stations x; 1: value = x over
/// stations y).
struct ReservoirScenario {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;       // reservoir rectangle
  std::vector<Eigen::Vector2d> well;           // polygon, counter-clockwise
  int graph_axis = 0;
  std::vector<FractureDescriptor> fractures;
  FluidParams params;
};

struct MeshControls {
  double target_spacing = 0.25;  // nominal element size
  int n_across = 4;              // strip layers across the thickness (even)
  double well_refine = 4.0;      // extra station refinement factor near well
  double well_margin = 1.0;      // half-width of the refined zone
  double snap_tol = 0.08;        // node-to-well-boundary snapping distance
};

/// Conforming triangulation of the reservoir cross-section. Fracture strips
/// are bands of triangles tagged with the fracture index; their centerlines
/// are chains of mesh nodes usable as 1-D line elements.
struct CoupledMesh {
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::array<int, 3>> tris;
  std::vector<int> tri_region;  // -1 porous matrix, k >= 0 strip of fracture k
  std::vector<double> areas;    // per-triangle area

  struct Line {
    std::vector<int> nodes;  // ordered along the fracture
    std::vector<double> t;   // station parameter per node
    std::vector<double> u;   // surface coordinate per node
  };
  std::vector<Line> lines;

  // Per fracture, per line entry: the node indices across the strip band at
  // that station (centerline node included). Used by the reduced solver to
  // enforce a thickness-independent fracture pressure.
  std::vector<std::vector<std::vector<int>>> band_columns;

  std::vector<int> well_nodes;  // Dirichlet nodes on the well boundary

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_tris() const { return static_cast<int>(tris.size()); }
  double total_area() const;
  double strip_area() const;
};

CoupledMesh build_coupled_mesh(const ReservoirScenario& scn, const MeshControls& ctl);

/// Structured polar mesh of the annulus r_w <= r <= R with the inner circle
/// tagged as the well (validation geometry, no fractures).
CoupledMesh make_annulus_mesh(double r_w, double R, int n_r, int n_theta);

/// Point-in-polygon (even-odd rule, boundary counts as inside).
bool point_in_polygon(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& poly);

/// Distance from a point to the polygon boundary and the closest point on it.
double polygon_boundary_distance(const Eigen::Vector2d& p,
                                 const std::vector<Eigen::Vector2d>& poly,
                                 Eigen::Vector2d* closest = nullptr);

}  // namespace fracflow
