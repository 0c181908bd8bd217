#include "fracflow/coupled_solver.hpp"

#include "fracflow/fracture_solvers.hpp"

#include <cmath>
#include <numeric>

namespace fracflow {

namespace {

// Compensated (Kahan) accumulator.  The volume means enter relative
// differences of nearly equal quantities, so plain summation roundoff over
// tens of thousands of triangles is visible at the 1e-14 level.
struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
};

struct TriGeom {
  double b[3], c[3];  // shape gradients: grad phi_i = (b_i, c_i)
  double area;
};

std::vector<TriGeom> tri_geometry(const CoupledMesh& mesh) {
  std::vector<TriGeom> g(mesh.num_tris());
  for (int k = 0; k < mesh.num_tris(); ++k) {
    const auto& t = mesh.tris[k];
    const Eigen::Vector2d& p0 = mesh.nodes[t[0]];
    const Eigen::Vector2d& p1 = mesh.nodes[t[1]];
    const Eigen::Vector2d& p2 = mesh.nodes[t[2]];
    const double a2 = 2.0 * mesh.areas[k];
    g[k].area = mesh.areas[k];
    g[k].b[0] = (p1.y() - p2.y()) / a2;
    g[k].b[1] = (p2.y() - p0.y()) / a2;
    g[k].b[2] = (p0.y() - p1.y()) / a2;
    g[k].c[0] = (p2.x() - p1.x()) / a2;
    g[k].c[1] = (p0.x() - p2.x()) / a2;
    g[k].c[2] = (p1.x() - p0.x()) / a2;
  }
  return g;
}

// Per-fracture view used by the thickness-quadrature coefficients.
FractureScenario fracture_view(const FractureDescriptor& fd, const FluidParams& p) {
  FractureScenario fs;
  fs.patch = fd.patch;
  fs.thickness = fd.thickness;
  fs.params = p;
  fs.params.alpha = 1.0 / p.k_f;
  return fs;
}

struct LineElement {
  int a = 0, b = 0;     // node ids
  double du = 0.0;      // |u_b - u_a|
  double u_mid = 0.0;
  int frac = 0;
};

std::vector<LineElement> line_elements(const CoupledMesh& mesh) {
  std::vector<LineElement> elems;
  for (size_t k = 0; k < mesh.lines.size(); ++k) {
    const auto& line = mesh.lines[k];
    for (size_t i = 0; i + 1 < line.nodes.size(); ++i) {
      LineElement e;
      e.a = line.nodes[i];
      e.b = line.nodes[i + 1];
      e.du = std::abs(line.u[i + 1] - line.u[i]);
      e.u_mid = 0.5 * (line.u[i] + line.u[i + 1]);
      e.frac = static_cast<int>(k);
      elems.push_back(e);
    }
  }
  return elems;
}

CoupledSolution solve_coupled(const ReservoirScenario& scn, const CoupledMesh& mesh,
                              const PicardConfig& cfg, bool reduced) {
  const int n = mesh.num_nodes();
  const std::vector<TriGeom> geo = tri_geometry(mesh);
  const double alpha_f = 1.0 / scn.params.k_f;

  std::vector<FractureScenario> views;
  for (const auto& fd : scn.fractures) views.push_back(fracture_view(fd, scn.params));

  std::vector<LineElement> lelems;
  double line_int_A = 0.0;
  std::vector<double> elem_A;
  // In the reduced model the fracture pressure does not vary across the
  // thickness: every strip node is tied to the centerline pressure at the
  // foot of its surface normal (interpolated between line nodes), the strip
  // triangles drop out of the assembly, and the fracture acts through the
  // thickness-integrated line operator. The porous matrix keeps its true
  // boundary at the strip faces.
  struct Rep {
    int dof;
    double w;
  };
  std::vector<std::vector<Rep>> reps(n);
  for (int v = 0; v < n; ++v) reps[v] = {{v, 1.0}};
  std::vector<char> is_well(n, 0);
  for (int v : mesh.well_nodes) is_well[v] = 1;
  if (reduced) {
    lelems = line_elements(mesh);
    elem_A.resize(lelems.size());
    for (size_t e = 0; e < lelems.size(); ++e) {
      elem_A[e] =
          reduced_coefficients(views[lelems[e].frac], lelems[e].u_mid, 0.0).A;
      line_int_A += elem_A[e] * lelems[e].du;
    }
    for (size_t k = 0; k < mesh.band_columns.size(); ++k) {
      const auto& line = mesh.lines[k];
      const auto& fd = scn.fractures[k];
      if (line.nodes.size() < 2) continue;
      for (size_t i = 0; i < mesh.band_columns[k].size(); ++i) {
        const double t = line.t[i];
        const double fp = fd.dF(std::clamp(t, fd.t0, fd.t1));
        const double sg = std::sqrt(1.0 + fp * fp);
        const double h = fd.h_at(t);
        const double yc = fd.center(t);
        const double delta = h * sg;
        for (int v : mesh.band_columns[k][i]) {
          if (is_well[v]) continue;  // Dirichlet wins at the junction
          const double val =
              scn.graph_axis == 0 ? mesh.nodes[v].y() : mesh.nodes[v].x();
          const double s = std::clamp((val - yc) / delta, -1.0, 1.0);
          // Normal foot of the node on the centerline, in station parameter.
          double tf = t + s * h * fp / sg;
          tf = std::clamp(tf, line.t.front(), line.t.back());
          auto it = std::upper_bound(line.t.begin(), line.t.end(), tf);
          size_t j = static_cast<size_t>(it - line.t.begin());
          j = std::clamp<size_t>(j, 1, line.t.size() - 1);
          const double th =
              (tf - line.t[j - 1]) / (line.t[j] - line.t[j - 1]);
          if (th < 1e-12) {
            reps[v] = {{line.nodes[j - 1], 1.0}};
          } else if (th > 1.0 - 1e-12) {
            reps[v] = {{line.nodes[j], 1.0}};
          } else {
            reps[v] = {{line.nodes[j - 1], 1.0 - th}, {line.nodes[j], th}};
          }
        }
      }
    }
  }
  double tri_volume = 0.0;
  for (int k = 0; k < mesh.num_tris(); ++k) {
    if (!reduced || mesh.tri_region[k] < 0) tri_volume += mesh.areas[k];
  }
  const double omega = tri_volume + line_int_A;
  const double src = scn.params.Q / omega;

  std::vector<std::pair<int, double>> dirichlet;
  for (int v : mesh.well_nodes) dirichlet.emplace_back(v, 0.0);

  auto assemble = [&](const VectorXd& W) {
    std::vector<Triplet> trips;
    trips.reserve(9 * mesh.num_tris() + 4 * lelems.size());
    VectorXd load = VectorXd::Zero(n);
    for (int k = 0; k < mesh.num_tris(); ++k) {
      if (reduced && mesh.tri_region[k] >= 0) continue;
      const auto& t = mesh.tris[k];
      const TriGeom& g = geo[k];
      double coef;
      if (mesh.tri_region[k] < 0) {
        coef = scn.params.k_p;
      } else {
        double gx = 0.0, gy = 0.0;
        for (int a = 0; a < 3; ++a) {
          gx += W[t[a]] * g.b[a];
          gy += W[t[a]] * g.c[a];
        }
        coef = f_beta(alpha_f, scn.params.beta, std::hypot(gx, gy));
      }
      for (int a = 0; a < 3; ++a) {
        for (const auto& ra : reps[t[a]]) {
          load[ra.dof] += ra.w * src * g.area / 3.0;
          for (int b = 0; b < 3; ++b) {
            const double kab =
                coef * g.area * (g.b[a] * g.b[b] + g.c[a] * g.c[b]);
            for (const auto& rb : reps[t[b]]) {
              trips.emplace_back(ra.dof, rb.dof, ra.w * rb.w * kab);
            }
          }
        }
      }
    }
    for (size_t e = 0; e < lelems.size(); ++e) {
      const LineElement& le = lelems[e];
      const double dWdu = (W[le.b] - W[le.a]) / le.du;
      const double L11 =
          reduced_coefficients(views[le.frac], le.u_mid, dWdu).L11;
      const double ke = L11 / le.du;
      trips.emplace_back(le.a, le.a, ke);
      trips.emplace_back(le.b, le.b, ke);
      trips.emplace_back(le.a, le.b, -ke);
      trips.emplace_back(le.b, le.a, -ke);
      const double fe = src * elem_A[e] * le.du * 0.5;
      load[le.a] += fe;
      load[le.b] += fe;
    }
    if (reduced) {
      std::vector<char> has_row(n, 0);
      for (const Triplet& tr : trips) has_row[tr.row()] = 1;
      for (int v = 0; v < n; ++v) {
        const bool slaved = reps[v].size() != 1 || reps[v][0].dof != v;
        if (slaved) {
          trips.emplace_back(v, v, 1.0);
          for (const auto& r : reps[v]) trips.emplace_back(v, r.dof, -r.w);
        } else if (!has_row[v]) {
          // Node isolated by the well carving; pin it to keep the system
          // non-singular (it carries no flux).
          trips.emplace_back(v, v, 1.0);
        }
      }
    }
    return SparseSystem::build(n, trips, load, dirichlet);
  };

  CoupledSolution sol;
  sol.mesh = &mesh;
  sol.reduced = reduced;
  sol.omega_vol = omega;
  sol.W = VectorXd::Zero(n);
  sol.stats = picard_solve(assemble, sol.W, cfg);
  sol.system = assemble(sol.W);

  if (reduced) {
    std::vector<Triplet> trips;
    VectorXd bl = VectorXd::Zero(n);
    sol.line_weight = VectorXd::Zero(n);
    for (size_t e = 0; e < lelems.size(); ++e) {
      const LineElement& le = lelems[e];
      const double dWdu = (sol.W[le.b] - sol.W[le.a]) / le.du;
      const double L11 =
          reduced_coefficients(views[le.frac], le.u_mid, dWdu).L11;
      const double ke = L11 / le.du;
      trips.emplace_back(le.a, le.a, ke);
      trips.emplace_back(le.b, le.b, ke);
      trips.emplace_back(le.a, le.b, -ke);
      trips.emplace_back(le.b, le.a, -ke);
      const double fe = src * elem_A[e] * le.du * 0.5;
      bl[le.a] += fe;
      bl[le.b] += fe;
      sol.line_weight[le.a] += 0.5 * le.du;
      sol.line_weight[le.b] += 0.5 * le.du;
    }
    sol.A_line.resize(n, n);
    sol.A_line.setFromTriplets(trips.begin(), trips.end());
    sol.b_line = bl;
  }
  return sol;
}

}  // namespace

CoupledSolution solve_coupled_original(const ReservoirScenario& scn,
                                       const CoupledMesh& mesh,
                                       const PicardConfig& cfg) {
  return solve_coupled(scn, mesh, cfg, false);
}

CoupledSolution solve_coupled_reduced(const ReservoirScenario& scn,
                                      const CoupledMesh& mesh,
                                      const PicardConfig& cfg) {
  return solve_coupled(scn, mesh, cfg, true);
}

double domain_mean(const CoupledSolution& sol, const ReservoirScenario& scn,
                   const VectorXd& field) {
  const CoupledMesh& mesh = *sol.mesh;
  KahanSum acc;
  for (int k = 0; k < mesh.num_tris(); ++k) {
    if (sol.reduced && mesh.tri_region[k] >= 0) continue;
    const auto& t = mesh.tris[k];
    acc.add(mesh.areas[k] * (field[t[0]] + field[t[1]] + field[t[2]]) / 3.0);
  }
  if (sol.reduced) {
    std::vector<FractureScenario> views;
    for (const auto& fd : scn.fractures)
      views.push_back(fracture_view(fd, scn.params));
    for (const LineElement& le : line_elements(mesh)) {
      const double A = reduced_coefficients(views[le.frac], le.u_mid, 0.0).A;
      acc.add(A * le.du * 0.5 * (field[le.a] + field[le.b]));
    }
  }
  return acc.s / sol.omega_vol;
}

double well_mean(const CoupledSolution& sol, const VectorXd& field) {
  const auto& wn = sol.mesh->well_nodes;
  if (wn.empty()) throw std::invalid_argument("well_mean: mesh has no well nodes");
  KahanSum acc;
  for (int v : wn) acc.add(field[v]);
  return acc.s / static_cast<double>(wn.size());
}

double diffusive_capacity(const CoupledSolution& sol, const ReservoirScenario& scn) {
  const double pdd = domain_mean(sol, scn, sol.W) - well_mean(sol, sol.W);
  if (!(std::abs(pdd) > 0.0)) {
    throw SolveError("diffusive_capacity: zero pressure draw-down");
  }
  return scn.params.Q / pdd;
}

double well_outflux(const CoupledSolution& sol) {
  const VectorXd r = sol.system.reactions(sol.W);
  double acc = 0.0;
  for (int v : sol.mesh->well_nodes) acc += r[v];
  return -acc;
}

VectorXd pss_reconstruct(const PssState& state, double t) {
  VectorXd p = state.W;
  p.array() += state.K - state.gamma * state.A * t;
  return p;
}

VectorXd line_flux_density(const CoupledSolution& sol) {
  if (!sol.reduced) {
    throw std::invalid_argument("line_flux_density: not a reduced solution");
  }
  VectorXd q = sol.A_line * sol.W - sol.b_line;
  for (int i = 0; i < q.size(); ++i) {
    q[i] = sol.line_weight[i] > 0.0 ? q[i] / sol.line_weight[i] : 0.0;
  }
  return q;
}

double grad_diff_sq_matrix(const CoupledMesh& mesh, const VectorXd& W1,
                           const VectorXd& W2) {
  const std::vector<TriGeom> geo = tri_geometry(mesh);
  double acc = 0.0;
  for (int k = 0; k < mesh.num_tris(); ++k) {
    if (mesh.tri_region[k] >= 0) continue;
    const auto& t = mesh.tris[k];
    double gx = 0.0, gy = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double d = W1[t[a]] - W2[t[a]];
      gx += d * geo[k].b[a];
      gy += d * geo[k].c[a];
    }
    acc += mesh.areas[k] * (gx * gx + gy * gy);
  }
  return acc;
}

DifferenceStudy coupled_difference_study(
    const std::function<ReservoirScenario(double)>& scenario_of_H,
    const std::vector<double>& h_list, const MeshControls& ctl,
    const PicardConfig& cfg) {
  DifferenceStudy study;
  for (double H : h_list) {
    const ReservoirScenario scn = scenario_of_H(H);
    const CoupledMesh mesh = build_coupled_mesh(scn, ctl);
    const CoupledSolution pd = solve_coupled_original(scn, mesh, cfg);
    const CoupledSolution r1 = solve_coupled_reduced(scn, mesh, cfg);

    DifferenceStudyRow row;
    row.H = H;
    row.diff_grad_sq = grad_diff_sq_matrix(mesh, pd.W, r1.W);
    row.picard_pd = pd.stats.iterations;
    row.picard_r1 = r1.stats.iterations;

    const VectorXd qbar = line_flux_density(r1);
    std::vector<char> is_well(mesh.num_nodes(), 0);
    for (int v : mesh.well_nodes) is_well[v] = 1;
    double max_q = 0.0;
    for (size_t k = 0; k < mesh.lines.size(); ++k) {
      const auto& line = mesh.lines[k];
      for (size_t i = 0; i < line.nodes.size(); ++i) {
        const int v = line.nodes[i];
        if (is_well[v]) continue;
        const double h = scn.fractures[k].thickness.h(line.u[i], 0.0);
        max_q = std::max(max_q, std::abs(qbar[v]) / h);
      }
    }
    row.max_qbar_over_h = max_q;
    study.rows.push_back(row);
  }

  // Least-squares log-log slope of diff_grad_sq vs H.
  const int m = static_cast<int>(study.rows.size());
  if (m >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& row : study.rows) {
      const double x = std::log(row.H);
      const double y = std::log(std::max(row.diff_grad_sq, 1e-300));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    study.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return study;
}

}  // namespace fracflow
