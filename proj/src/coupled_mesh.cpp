#include "fracflow/coupled_mesh.hpp"

#include "fracflow/discretization.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace fracflow {

namespace {

double tri_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                const Eigen::Vector2d& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

}  // namespace

double CoupledMesh::total_area() const {
  return std::accumulate(areas.begin(), areas.end(), 0.0);
}

double CoupledMesh::strip_area() const {
  double s = 0.0;
  for (int k = 0; k < num_tris(); ++k) {
    if (tri_region[k] >= 0) s += areas[k];
  }
  return s;
}

bool point_in_polygon(const Eigen::Vector2d& p,
                      const std::vector<Eigen::Vector2d>& poly) {
  if (polygon_boundary_distance(p, poly) < 1e-12) return true;
  bool inside = false;
  const int n = static_cast<int>(poly.size());
  for (int i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double xc = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (p.x() < xc) inside = !inside;
    }
  }
  return inside;
}

double polygon_boundary_distance(const Eigen::Vector2d& p,
                                 const std::vector<Eigen::Vector2d>& poly,
                                 Eigen::Vector2d* closest) {
  double best = std::numeric_limits<double>::max();
  const int n = static_cast<int>(poly.size());
  for (int i = 0, j = n - 1; i < n; j = i++) {
    const Eigen::Vector2d& a = poly[j];
    const Eigen::Vector2d d = poly[i] - a;
    const double len2 = d.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Eigen::Vector2d q = a + t * d;
    const double dist = (p - q).norm();
    if (dist < best) {
      best = dist;
      if (closest) *closest = q;
    }
  }
  return best;
}

namespace {

// Station list: union of pins refined until every interval is shorter than
// the local target (finer near the well's station extent).
std::vector<double> build_stations(double s0, double s1, double spc,
                                   double fine_lo, double fine_hi, double fine_spc,
                                   std::vector<double> pins) {
  pins.push_back(s0);
  pins.push_back(s1);
  std::sort(pins.begin(), pins.end());
  std::vector<double> st;
  const double tol = 1e-9 * (s1 - s0);
  for (double p : pins) {
    p = std::clamp(p, s0, s1);
    if (st.empty() || p - st.back() > tol) st.push_back(p);
  }
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<double> next;
    next.reserve(2 * st.size());
    for (size_t i = 0; i + 1 < st.size(); ++i) {
      next.push_back(st[i]);
      const double len = st[i + 1] - st[i];
      const double mid = 0.5 * (st[i] + st[i + 1]);
      const bool fine = mid > fine_lo && mid < fine_hi;
      if (len > (fine ? fine_spc : spc) + tol) {
        next.push_back(mid);
        changed = true;
      }
    }
    next.push_back(st.back());
    st.swap(next);
  }
  return st;
}

// Graded distribution maps on [0,1]: 0 = uniform, 1 = cluster at the upper
// end, 2 = cluster at the lower end, 3 = cluster at both ends.
double grade_map(double r, int mode) {
  constexpr double pi = 3.14159265358979323846;
  switch (mode) {
    case 1:
      return std::sin(0.5 * pi * r);
    case 2:
      return 1.0 - std::cos(0.5 * pi * r);
    case 3:
      return 0.5 * (1.0 - std::cos(pi * r));
    default:
      return r;
  }
}

}  // namespace

CoupledMesh build_coupled_mesh(const ReservoirScenario& scn, const MeshControls& ctl) {
  if (ctl.n_across < 2 || ctl.n_across % 2 != 0) {
    throw AssemblyError("build_coupled_mesh: n_across must be a positive even number");
  }
  const int axis = scn.graph_axis;
  const double s0 = axis == 0 ? scn.x0 : scn.y0;
  const double s1 = axis == 0 ? scn.x1 : scn.y1;
  const double w0 = axis == 0 ? scn.y0 : scn.x0;
  const double w1 = axis == 0 ? scn.y1 : scn.x1;
  auto to_phys = [axis](double s, double w) {
    return axis == 0 ? Eigen::Vector2d(s, w) : Eigen::Vector2d(w, s);
  };
  auto to_sw = [axis](const Eigen::Vector2d& p) {
    return axis == 0 ? Eigen::Vector2d(p.x(), p.y()) : Eigen::Vector2d(p.y(), p.x());
  };

  // Well extent along the station axis (for local refinement and pins).
  double well_smin = s1, well_smax = s0;
  for (const auto& v : scn.well) {
    const double s = to_sw(v).x();
    well_smin = std::min(well_smin, s);
    well_smax = std::max(well_smax, s);
  }

  std::vector<double> pins{well_smin, well_smax};
  for (const auto& fd : scn.fractures) {
    pins.push_back(fd.t0);
    pins.push_back(fd.t1);
  }
  const std::vector<double> st = build_stations(
      s0, s1, ctl.target_spacing, well_smin - ctl.well_margin,
      well_smax + ctl.well_margin, ctl.target_spacing / ctl.well_refine, pins);
  const int ns = static_cast<int>(st.size());

  // Order fracture bands bottom-to-top by their mid-range center value.
  const int nf = static_cast<int>(scn.fractures.size());
  std::vector<int> order(nf);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& fa = scn.fractures[a];
    const auto& fb = scn.fractures[b];
    return fa.F(0.5 * (fa.t0 + fa.t1)) < fb.F(0.5 * (fb.t0 + fb.t1));
  });

  // Segment element counts from station-averaged segment lengths.
  const int nseg = nf + 1;
  std::vector<double> seg_len(nseg, 0.0);
  for (double s : st) {
    double lo = w0;
    for (int b = 0; b < nf; ++b) {
      const auto& fd = scn.fractures[order[b]];
      const double c = fd.center(s);
      const double d = fd.band_half(s);
      seg_len[b] += (c - d) - lo;
      lo = c + d;
    }
    seg_len[nf] += w1 - lo;
  }
  std::vector<int> seg_n(nseg);
  for (int j = 0; j < nseg; ++j) {
    seg_len[j] /= ns;
    seg_n[j] = std::clamp(static_cast<int>(std::ceil(seg_len[j] / ctl.target_spacing)),
                          2, 400);
  }
  auto seg_mode = [&](int j) {
    if (nf == 0) return 0;
    if (j == 0) return 1;       // cluster toward the band above
    if (j == nseg - 1) return 2;  // cluster toward the band below
    return 3;                     // cluster toward both bands
  };

  // Row bookkeeping: rows = seg0 rows, band0 rows, seg1 rows, ...
  std::vector<int> band_row_start(nf);
  int nrows = 0;
  for (int b = 0; b < nf; ++b) {
    nrows += seg_n[b];
    band_row_start[b] = nrows;
    nrows += ctl.n_across;
  }
  nrows += seg_n[nf];
  const int nr = nrows + 1;  // node rows

  // Node values: idx = j * ns + i.
  std::vector<double> wval(static_cast<size_t>(nr) * ns);
  for (int i = 0; i < ns; ++i) {
    const double s = st[i];
    std::vector<double> anchors;
    anchors.push_back(w0);
    for (int b = 0; b < nf; ++b) {
      const auto& fd = scn.fractures[order[b]];
      const double c = fd.center(s);
      const double d = fd.band_half(s);
      anchors.push_back(c - d);
      anchors.push_back(c + d);
    }
    anchors.push_back(w1);
    for (size_t a = 1; a < anchors.size(); ++a) {
      if (!(anchors[a] > anchors[a - 1])) {
        std::ostringstream os;
        os << "build_coupled_mesh: fracture bands cross or leave the domain at "
              "station "
           << s;
        throw AssemblyError(os.str());
      }
    }
    int row = 0;
    auto put = [&](double w) { wval[static_cast<size_t>(row++) * ns + i] = w; };
    for (int b = 0; b <= nf; ++b) {
      const double lo = anchors[2 * b];
      const double hi = anchors[2 * b + 1];
      const int n = seg_n[b];
      const int mode = seg_mode(b);
      for (int l = 0; l < n; ++l) {
        put(lo + (hi - lo) * grade_map(static_cast<double>(l) / n, mode));
      }
      if (b < nf) {
        const double blo = anchors[2 * b + 1];
        const double bhi = anchors[2 * b + 2];
        for (int l = 0; l < ctl.n_across; ++l) {
          put(blo + (bhi - blo) * static_cast<double>(l) / ctl.n_across);
        }
      }
    }
    put(w1);
  }

  CoupledMesh mesh;
  mesh.nodes.resize(static_cast<size_t>(nr) * ns);
  for (int j = 0; j < nr; ++j) {
    for (int i = 0; i < ns; ++i) {
      mesh.nodes[static_cast<size_t>(j) * ns + i] =
          to_phys(st[i], wval[static_cast<size_t>(j) * ns + i]);
    }
  }

  const double ttol = 1e-9 * (s1 - s0);
  auto cell_region = [&](int i, int j) {
    for (int b = 0; b < nf; ++b) {
      if (j >= band_row_start[b] && j < band_row_start[b] + ctl.n_across) {
        const auto& fd = scn.fractures[order[b]];
        if (st[i] >= fd.t0 - ttol && st[i + 1] <= fd.t1 + ttol) return order[b];
        return -1;
      }
    }
    return -1;
  };

  for (int j = 0; j < nr - 1; ++j) {
    for (int i = 0; i < ns - 1; ++i) {
      const int a = j * ns + i;
      const int b = j * ns + i + 1;
      const int c = (j + 1) * ns + i + 1;
      const int d = (j + 1) * ns + i;
      const int reg = cell_region(i, j);
      // For axis = 1 the (station, value) -> (x, y) swap mirrors the plane,
      // so the connectivity is reversed to keep positive orientation.
      if (axis == 0) {
        mesh.tris.push_back({a, b, c});
        mesh.tris.push_back({a, c, d});
      } else {
        mesh.tris.push_back({a, c, b});
        mesh.tris.push_back({a, d, c});
      }
      mesh.tri_region.push_back(reg);
      mesh.tri_region.push_back(reg);
    }
  }

  // Fracture centerlines and strip node columns (original fracture indexing).
  mesh.lines.resize(nf);
  mesh.band_columns.resize(nf);
  for (int b = 0; b < nf; ++b) {
    const int k = order[b];
    const auto& fd = scn.fractures[k];
    const int row = band_row_start[b] + ctl.n_across / 2;
    CoupledMesh::Line& line = mesh.lines[k];
    for (int i = 0; i < ns; ++i) {
      if (st[i] >= fd.t0 - ttol && st[i] <= fd.t1 + ttol) {
        line.nodes.push_back(row * ns + i);
        line.t.push_back(st[i]);
        line.u.push_back(fd.u_of_t(st[i]));
        std::vector<int> col;
        for (int l = 0; l <= ctl.n_across; ++l) {
          col.push_back((band_row_start[b] + l) * ns + i);
        }
        mesh.band_columns[k].push_back(std::move(col));
      }
    }
  }

  // Carve the well: snap near-boundary nodes, drop triangles with centroid
  // inside, compact node numbering. The snap distance is capped per node by
  // a fraction of the local grid spacing so snapping cannot collapse
  // elements.
  if (!scn.well.empty()) {
    for (int j = 0; j < nr; ++j) {
      for (int i = 0; i < ns; ++i) {
        Eigen::Vector2d& p = mesh.nodes[static_cast<size_t>(j) * ns + i];
        double dmin = std::numeric_limits<double>::max();
        if (i > 0) dmin = std::min(dmin, st[i] - st[i - 1]);
        if (i + 1 < ns) dmin = std::min(dmin, st[i + 1] - st[i]);
        const size_t col = static_cast<size_t>(j) * ns + i;
        if (j > 0) dmin = std::min(dmin, std::abs(wval[col] - wval[col - ns]));
        if (j + 1 < nr) dmin = std::min(dmin, std::abs(wval[col + ns] - wval[col]));
        const double tol = std::min(ctl.snap_tol, 0.45 * dmin);
        Eigen::Vector2d q;
        if (polygon_boundary_distance(p, scn.well, &q) <= tol) p = q;
      }
    }
  }
  std::vector<std::array<int, 3>> kept_tris;
  std::vector<int> kept_region;
  const double area_floor = 1e-12 * ctl.target_spacing * ctl.target_spacing;
  for (int k = 0; k < mesh.num_tris(); ++k) {
    const auto& t = mesh.tris[k];
    const Eigen::Vector2d cen =
        (mesh.nodes[t[0]] + mesh.nodes[t[1]] + mesh.nodes[t[2]]) / 3.0;
    if (!scn.well.empty() && point_in_polygon(cen, scn.well)) continue;
    const double ar = tri_area(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
    if (ar <= area_floor) continue;
    kept_tris.push_back(t);
    kept_region.push_back(mesh.tri_region[k]);
  }

  std::vector<int> remap(mesh.num_nodes(), -1);
  std::vector<Eigen::Vector2d> new_nodes;
  for (auto& t : kept_tris) {
    for (int& v : t) {
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(new_nodes.size());
        new_nodes.push_back(mesh.nodes[v]);
      }
      v = remap[v];
    }
  }
  mesh.nodes.swap(new_nodes);
  mesh.tris.swap(kept_tris);
  mesh.tri_region.swap(kept_region);

  for (size_t k = 0; k < mesh.lines.size(); ++k) {
    CoupledMesh::Line& line = mesh.lines[k];
    CoupledMesh::Line nl;
    std::vector<std::vector<int>> ncols;
    for (size_t i = 0; i < line.nodes.size(); ++i) {
      const int nn = remap[line.nodes[i]];
      if (nn >= 0) {
        nl.nodes.push_back(nn);
        nl.t.push_back(line.t[i]);
        nl.u.push_back(line.u[i]);
        std::vector<int> col;
        for (int v : mesh.band_columns[k][i]) {
          if (remap[v] >= 0) col.push_back(remap[v]);
        }
        ncols.push_back(std::move(col));
      }
    }
    line = std::move(nl);
    mesh.band_columns[k] = std::move(ncols);
  }

  mesh.areas.resize(mesh.num_tris());
  for (int k = 0; k < mesh.num_tris(); ++k) {
    const auto& t = mesh.tris[k];
    mesh.areas[k] = tri_area(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
  }

  if (!scn.well.empty()) {
    for (int v = 0; v < mesh.num_nodes(); ++v) {
      if (polygon_boundary_distance(mesh.nodes[v], scn.well) <= 1e-9 ||
          point_in_polygon(mesh.nodes[v], scn.well)) {
        mesh.well_nodes.push_back(v);
      }
    }
    if (mesh.well_nodes.empty()) {
      throw AssemblyError("build_coupled_mesh: no mesh nodes on the well boundary");
    }
  }
  return mesh;
}

CoupledMesh make_annulus_mesh(double r_w, double R, int n_r, int n_theta) {
  if (!(R > r_w) || !(r_w > 0.0) || n_r < 2 || n_theta < 3) {
    throw AssemblyError("make_annulus_mesh: invalid annulus parameters");
  }
  CoupledMesh mesh;
  const double ratio = R / r_w;
  for (int i = 0; i <= n_r; ++i) {
    const double r = r_w * std::pow(ratio, static_cast<double>(i) / n_r);
    for (int j = 0; j < n_theta; ++j) {
      const double th = 2.0 * M_PI * j / n_theta;
      mesh.nodes.emplace_back(r * std::cos(th), r * std::sin(th));
    }
  }
  auto id = [n_theta](int i, int j) { return i * n_theta + (j % n_theta); };
  for (int i = 0; i < n_r; ++i) {
    for (int j = 0; j < n_theta; ++j) {
      mesh.tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
      mesh.tri_region.push_back(-1);
      mesh.tri_region.push_back(-1);
    }
  }
  mesh.areas.resize(mesh.num_tris());
  for (int k = 0; k < mesh.num_tris(); ++k) {
    const auto& t = mesh.tris[k];
    mesh.areas[k] = tri_area(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
  }
  for (int j = 0; j < n_theta; ++j) mesh.well_nodes.push_back(j);
  return mesh;
}

}  // namespace fracflow
