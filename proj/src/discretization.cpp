#include "fracflow/discretization.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fracflow {

namespace {
constexpr double kGauss2 = 0.5773502691896257;  // 1/sqrt(3)
constexpr double kTiny = 1e-300;
}  // namespace

Grid1D Grid1D::uniform(double a, double b, int n_elems) {
  if (n_elems < 2 || !(b > a)) {
    throw std::invalid_argument("Grid1D::uniform: need b > a and >= 2 elements");
  }
  Grid1D g;
  g.nodes.resize(n_elems + 1);
  for (int i = 0; i <= n_elems; ++i) {
    g.nodes[i] = a + (b - a) * static_cast<double>(i) / n_elems;
  }
  return g;
}

Grid2D Grid2D::mapped(std::vector<double> u_nodes, int n_levels,
                      const std::function<double(double)>& half_thickness) {
  if (u_nodes.size() < 2 || n_levels < 2) {
    throw std::invalid_argument("Grid2D::mapped: need >= 2 u-nodes and >= 2 levels");
  }
  Grid2D g;
  g.u = std::move(u_nodes);
  g.nu = static_cast<int>(g.u.size()) - 1;
  g.ns = n_levels;
  g.s.resize(n_levels + 1);
  for (int j = 0; j <= n_levels; ++j) {
    g.s[j] = -1.0 + 2.0 * static_cast<double>(j) / n_levels;
  }
  g.lambda.resize(g.num_nodes());
  for (int j = 0; j <= g.ns; ++j) {
    for (int i = 0; i <= g.nu; ++i) {
      const double h = half_thickness(g.u[i]);
      if (!(h > 0.0)) {
        std::ostringstream os;
        os << "Grid2D::mapped: nonpositive half thickness at u = " << g.u[i];
        throw AssemblyError(os.str());
      }
      g.lambda[g.node(i, j)] = g.s[j] * h;
    }
  }
  return g;
}

SparseSystem SparseSystem::build(int n, const std::vector<Triplet>& triplets,
                                 const VectorXd& load,
                                 const std::vector<std::pair<int, double>>& dirichlet) {
  SparseSystem sys;
  sys.dirichlet = dirichlet;
  sys.A0.resize(n, n);
  sys.A0.setFromTriplets(triplets.begin(), triplets.end());
  sys.b0 = load;

  std::vector<char> fixed(n, 0);
  VectorXd xd = VectorXd::Zero(n);
  for (const auto& [dof, val] : dirichlet) {
    fixed[dof] = 1;
    xd[dof] = val;
  }

  sys.b = load - sys.A0 * xd;
  std::vector<Triplet> kept;
  kept.reserve(triplets.size() + dirichlet.size());
  for (const auto& t : triplets) {
    if (!fixed[t.row()] && !fixed[t.col()]) kept.push_back(t);
  }
  for (const auto& [dof, val] : dirichlet) {
    kept.emplace_back(dof, dof, 1.0);
    sys.b[dof] = val;
  }
  sys.A.resize(n, n);
  sys.A.setFromTriplets(kept.begin(), kept.end());
  return sys;
}

VectorXd SparseSystem::solve() const {
  // LU rather than LDLT: constrained systems (tied nodes) are not symmetric.
  Eigen::SparseLU<SparseMat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) {
    throw SolveError("SparseSystem::solve: factorization failed");
  }
  VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success) {
    throw SolveError("SparseSystem::solve: back substitution failed");
  }
  return x;
}

namespace {

PicardStats picard_run(const std::function<SparseSystem(const VectorXd&)>& assemble,
                       VectorXd& W, const PicardConfig& cfg) {
  PicardStats stats;
  for (int k = 0;; ++k) {
    const SparseSystem sys = assemble(W);
    const double bnorm = std::max(sys.b.norm(), kTiny);
    const double res = sys.residual_norm(W) / bnorm;
    stats.residual_history.push_back(res);
    stats.final_residual = res;
    if (res <= cfg.rel_tol) {
      return stats;
    }
    if (k >= cfg.max_iter) {
      std::ostringstream os;
      os << "picard_solve: no convergence after " << cfg.max_iter
         << " iterations (residual " << res << ")";
      throw IterationError(os.str(), stats.residual_history);
    }
    const VectorXd W_new = sys.solve();
    const double update =
        (W_new - W).norm() / std::max(W_new.norm(), kTiny);
    W = cfg.relaxation * W_new + (1.0 - cfg.relaxation) * W;
    ++stats.iterations;
    stats.final_update = update;
    if (update <= cfg.rel_tol) {
      return stats;
    }
  }
}

}  // namespace

PicardStats picard_solve(const std::function<SparseSystem(const VectorXd&)>& assemble,
                         VectorXd& W, const PicardConfig& cfg) {
  if (!(cfg.rel_tol > 0.0) || cfg.rel_tol >= 1.0 || cfg.max_iter < 1 ||
      !(cfg.relaxation > 0.0) || cfg.relaxation > 1.0) {
    throw std::invalid_argument("picard_solve: invalid PicardConfig");
  }
  try {
    return picard_run(assemble, W, cfg);
  } catch (const IterationError&) {
    if (cfg.relaxation <= 0.5) throw;
    PicardConfig damped = cfg;
    damped.relaxation = 0.5;
    return picard_run(assemble, W, damped);
  }
}

SparseSystem assemble_1d(const Grid1D& grid, const Coeff1D& coeff,
                         const Source1D& source, const BC1D& bc,
                         const VectorXd* W_prev) {
  const int n = grid.num_nodes();
  std::vector<Triplet> trips;
  trips.reserve(4 * grid.num_elems());
  VectorXd load = VectorXd::Zero(n);

  for (int e = 0; e < grid.num_elems(); ++e) {
    const double ua = grid.nodes[e];
    const double ub = grid.nodes[e + 1];
    const double he = ub - ua;
    const double dW =
        W_prev ? ((*W_prev)[e + 1] - (*W_prev)[e]) / he : 0.0;
    double k_acc = 0.0;
    for (int q = 0; q < 2; ++q) {
      const double xi = q == 0 ? -kGauss2 : kGauss2;
      const double uq = 0.5 * (ua + ub) + 0.5 * he * xi;
      const double c = coeff(uq, dW);
      if (!(c > 0.0)) {
        std::ostringstream os;
        os << "assemble_1d: nonpositive coefficient " << c << " at u = " << uq;
        throw AssemblyError(os.str());
      }
      k_acc += 0.5 * he * c / (he * he);
      const double sq = source(uq);
      const double na = 0.5 * (1.0 - xi);
      const double nb = 0.5 * (1.0 + xi);
      load[e] += 0.5 * he * sq * na;
      load[e + 1] += 0.5 * he * sq * nb;
    }
    trips.emplace_back(e, e, k_acc);
    trips.emplace_back(e + 1, e + 1, k_acc);
    trips.emplace_back(e, e + 1, -k_acc);
    trips.emplace_back(e + 1, e, -k_acc);
  }

  std::vector<std::pair<int, double>> dirichlet;
  if (bc.left_dirichlet) {
    dirichlet.emplace_back(0, bc.left_value);
  } else {
    load[0] += bc.left_flux;
  }
  if (bc.right_dirichlet) {
    dirichlet.emplace_back(n - 1, bc.right_value);
  } else {
    load[n - 1] += bc.right_flux;
  }
  return SparseSystem::build(n, trips, load, dirichlet);
}

SparseSystem assemble_2d(const Grid2D& grid, const Coeff2D& coeff,
                         const Source2D& source, const BC2D& bc,
                         const VectorXd* W_prev) {
  const int n = grid.num_nodes();
  std::vector<Triplet> trips;
  trips.reserve(16 * grid.nu * grid.ns);
  VectorXd load = VectorXd::Zero(n);

  const double gp[2] = {-kGauss2, kGauss2};

  for (int j = 0; j < grid.ns; ++j) {
    for (int i = 0; i < grid.nu; ++i) {
      const std::array<int, 4> nd = {grid.node(i, j), grid.node(i + 1, j),
                                     grid.node(i + 1, j + 1), grid.node(i, j + 1)};
      Eigen::Matrix<double, 4, 2> xy;
      for (int a = 0; a < 4; ++a) {
        const int col = (a == 0 || a == 3) ? i : i + 1;
        xy(a, 0) = grid.u[col];
        xy(a, 1) = grid.lambda[nd[a]];
      }
      Eigen::Matrix4d ke = Eigen::Matrix4d::Zero();
      Eigen::Vector4d fe = Eigen::Vector4d::Zero();
      for (int qa = 0; qa < 2; ++qa) {
        for (int qb = 0; qb < 2; ++qb) {
          const double xi = gp[qa];
          const double eta = gp[qb];
          const Eigen::Vector4d N{0.25 * (1 - xi) * (1 - eta),
                                  0.25 * (1 + xi) * (1 - eta),
                                  0.25 * (1 + xi) * (1 + eta),
                                  0.25 * (1 - xi) * (1 + eta)};
          Eigen::Matrix<double, 4, 2> dN;
          dN << -0.25 * (1 - eta), -0.25 * (1 - xi),  //
              0.25 * (1 - eta), -0.25 * (1 + xi),     //
              0.25 * (1 + eta), 0.25 * (1 + xi),      //
              -0.25 * (1 + eta), 0.25 * (1 - xi);
          const Eigen::Matrix2d J = (dN.transpose() * xy).transpose();
          const double detJ = J.determinant();
          if (!(detJ > 0.0)) {
            std::ostringstream os;
            os << "assemble_2d: nonpositive element Jacobian at element (" << i
               << ", " << j << ")";
            throw AssemblyError(os.str());
          }
          const Eigen::Matrix2d Jinv = J.inverse();
          // Physical shape gradients, rows = nodes.
          const Eigen::Matrix<double, 4, 2> gradN = dN * Jinv;
          const double uq = N.dot(xy.col(0));
          const double lq = N.dot(xy.col(1));
          Eigen::Vector2d gW = Eigen::Vector2d::Zero();
          if (W_prev) {
            for (int a = 0; a < 4; ++a) {
              gW += (*W_prev)[nd[a]] * gradN.row(a).transpose();
            }
          }
          const Eigen::Matrix2d C = coeff(uq, lq, gW);
          if (!(C(0, 0) > 0.0) || !(C.determinant() > 0.0)) {
            std::ostringstream os;
            os << "assemble_2d: coefficient not positive definite at (u=" << uq
               << ", lambda=" << lq << ")";
            throw AssemblyError(os.str());
          }
          ke += detJ * gradN * C * gradN.transpose();
          fe += detJ * source(uq, lq) * N;
        }
      }
      for (int a = 0; a < 4; ++a) {
        load[nd[a]] += fe[a];
        for (int bb = 0; bb < 4; ++bb) {
          trips.emplace_back(nd[a], nd[bb], ke(a, bb));
        }
      }
    }
  }

  // Boundary loads: Top/Bottom integrate per unit u, Left/Right per unit lambda.
  auto edge_load_u = [&](int j_row, Side side) {
    const auto& flux = bc.flux[static_cast<int>(side)];
    if (!flux) return;
    for (int i = 0; i < grid.nu; ++i) {
      const int na = grid.node(i, j_row);
      const int nb = grid.node(i + 1, j_row);
      const double ua = grid.u[i];
      const double ub = grid.u[i + 1];
      const double la = grid.lambda[na];
      const double lb = grid.lambda[nb];
      const double he = ub - ua;
      for (int q = 0; q < 2; ++q) {
        const double xi = gp[q];
        const double t = 0.5 * (1.0 + xi);
        const double g = flux(ua + t * he, la + t * (lb - la));
        load[na] += 0.5 * he * g * (1.0 - t);
        load[nb] += 0.5 * he * g * t;
      }
    }
  };
  auto edge_load_lambda = [&](int i_col, Side side) {
    const auto& flux = bc.flux[static_cast<int>(side)];
    if (!flux) return;
    for (int j = 0; j < grid.ns; ++j) {
      const int na = grid.node(i_col, j);
      const int nb = grid.node(i_col, j + 1);
      const double la = grid.lambda[na];
      const double lb = grid.lambda[nb];
      const double he = lb - la;
      for (int q = 0; q < 2; ++q) {
        const double t = 0.5 * (1.0 + gp[q]);
        const double g = flux(grid.u[i_col], la + t * he);
        load[na] += 0.5 * he * g * (1.0 - t);
        load[nb] += 0.5 * he * g * t;
      }
    }
  };
  edge_load_u(grid.ns, Side::Top);
  edge_load_u(0, Side::Bottom);
  edge_load_lambda(0, Side::Left);
  edge_load_lambda(grid.nu, Side::Right);

  std::vector<std::pair<int, double>> dirichlet;
  auto add_dirichlet = [&](Side side) {
    if (bc.kind[static_cast<int>(side)] != BC2D::Kind::Dirichlet) return;
    const auto& val = bc.value[static_cast<int>(side)];
    auto push = [&](int nd_id, double uu, double ll) {
      dirichlet.emplace_back(nd_id, val ? val(uu, ll) : 0.0);
    };
    switch (side) {
      case Side::Left:
        for (int j = 0; j <= grid.ns; ++j)
          push(grid.node(0, j), grid.u[0], grid.lambda[grid.node(0, j)]);
        break;
      case Side::Right:
        for (int j = 0; j <= grid.ns; ++j)
          push(grid.node(grid.nu, j), grid.u[grid.nu],
               grid.lambda[grid.node(grid.nu, j)]);
        break;
      case Side::Bottom:
        for (int i = 0; i <= grid.nu; ++i)
          push(grid.node(i, 0), grid.u[i], grid.lambda[grid.node(i, 0)]);
        break;
      case Side::Top:
        for (int i = 0; i <= grid.nu; ++i)
          push(grid.node(i, grid.ns), grid.u[i], grid.lambda[grid.node(i, grid.ns)]);
        break;
    }
  };
  add_dirichlet(Side::Left);
  add_dirichlet(Side::Right);
  add_dirichlet(Side::Bottom);
  add_dirichlet(Side::Top);

  // De-duplicate Dirichlet dofs (corners belong to two sides).
  std::sort(dirichlet.begin(), dirichlet.end());
  dirichlet.erase(std::unique(dirichlet.begin(), dirichlet.end(),
                              [](const auto& a, const auto& b) {
                                return a.first == b.first;
                              }),
                  dirichlet.end());

  return SparseSystem::build(n, trips, load, dirichlet);
}

namespace {

int find_interval(const std::vector<double>& xs, double x) {
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  int i = static_cast<int>(it - xs.begin()) - 1;
  i = std::clamp(i, 0, static_cast<int>(xs.size()) - 2);
  return i;
}

}  // namespace

double PressureField::value(double u) const {
  const int e = find_interval(grid->nodes, u);
  const double t = (u - grid->nodes[e]) / (grid->nodes[e + 1] - grid->nodes[e]);
  return (1.0 - t) * W[e] + t * W[e + 1];
}

double PressureField::deriv(double u) const {
  const int e = find_interval(grid->nodes, u);
  return (W[e + 1] - W[e]) / (grid->nodes[e + 1] - grid->nodes[e]);
}

double PressureField2D::value(double u, double s) const {
  const int i = find_interval(grid->u, u);
  const int j = find_interval(grid->s, s);
  const double tu = (u - grid->u[i]) / (grid->u[i + 1] - grid->u[i]);
  const double ts = (s - grid->s[j]) / (grid->s[j + 1] - grid->s[j]);
  const double w00 = W[grid->node(i, j)];
  const double w10 = W[grid->node(i + 1, j)];
  const double w11 = W[grid->node(i + 1, j + 1)];
  const double w01 = W[grid->node(i, j + 1)];
  return (1 - tu) * (1 - ts) * w00 + tu * (1 - ts) * w10 + tu * ts * w11 +
         (1 - tu) * ts * w01;
}

double PressureField2D::deriv_u(double u, double s) const {
  const int i = find_interval(grid->u, u);
  const int j = find_interval(grid->s, s);
  const double ts = (s - grid->s[j]) / (grid->s[j + 1] - grid->s[j]);
  const double du = grid->u[i + 1] - grid->u[i];
  const double lo = (W[grid->node(i + 1, j)] - W[grid->node(i, j)]) / du;
  const double hi = (W[grid->node(i + 1, j + 1)] - W[grid->node(i, j + 1)]) / du;
  return (1 - ts) * lo + ts * hi;
}

double lp_gradient_norm(const PressureField& field, double p_exp,
                        const std::function<double(double)>& weight) {
  if (!(p_exp >= 1.0)) {
    throw std::invalid_argument("lp_gradient_norm: exponent must be >= 1");
  }
  const Grid1D& g = *field.grid;
  double acc = 0.0;
  for (int e = 0; e < g.num_elems(); ++e) {
    const double he = g.nodes[e + 1] - g.nodes[e];
    const double dW = (field.W[e + 1] - field.W[e]) / he;
    for (int q = 0; q < 2; ++q) {
      const double uq = 0.5 * (g.nodes[e] + g.nodes[e + 1]) +
                        0.5 * he * (q == 0 ? -kGauss2 : kGauss2);
      const double w = weight ? weight(uq) : 1.0;
      acc += 0.5 * he * w * std::pow(std::abs(dW), p_exp);
    }
  }
  return std::pow(acc, 1.0 / p_exp);
}

double lp_gradient_norm(
    const PressureField2D& field, double p_exp,
    const std::function<double(double, double)>& weight,
    const std::function<double(double, double, const Eigen::Vector2d&)>& point) {
  if (!(p_exp >= 1.0)) {
    throw std::invalid_argument("lp_gradient_norm: exponent must be >= 1");
  }
  const Grid2D& g = *field.grid;
  const double gp[2] = {-kGauss2, kGauss2};
  double acc = 0.0;
  for (int j = 0; j < g.ns; ++j) {
    for (int i = 0; i < g.nu; ++i) {
      const std::array<int, 4> nd = {g.node(i, j), g.node(i + 1, j),
                                     g.node(i + 1, j + 1), g.node(i, j + 1)};
      Eigen::Matrix<double, 4, 2> xy;
      for (int a = 0; a < 4; ++a) {
        const int col = (a == 0 || a == 3) ? i : i + 1;
        xy(a, 0) = g.u[col];
        xy(a, 1) = g.lambda[nd[a]];
      }
      for (int qa = 0; qa < 2; ++qa) {
        for (int qb = 0; qb < 2; ++qb) {
          const double xi = gp[qa];
          const double eta = gp[qb];
          const Eigen::Vector4d N{0.25 * (1 - xi) * (1 - eta),
                                  0.25 * (1 + xi) * (1 - eta),
                                  0.25 * (1 + xi) * (1 + eta),
                                  0.25 * (1 - xi) * (1 + eta)};
          Eigen::Matrix<double, 4, 2> dN;
          dN << -0.25 * (1 - eta), -0.25 * (1 - xi),  //
              0.25 * (1 - eta), -0.25 * (1 + xi),     //
              0.25 * (1 + eta), 0.25 * (1 + xi),      //
              -0.25 * (1 + eta), 0.25 * (1 - xi);
          const Eigen::Matrix2d J = (dN.transpose() * xy).transpose();
          const double detJ = J.determinant();
          const Eigen::Matrix<double, 4, 2> gradN = dN * J.inverse();
          Eigen::Vector2d gW = Eigen::Vector2d::Zero();
          for (int a = 0; a < 4; ++a) gW += field.W[nd[a]] * gradN.row(a).transpose();
          const double uq = N.dot(xy.col(0));
          const double lq = N.dot(xy.col(1));
          const double val = point ? point(uq, lq, gW) : gW.norm();
          const double w = weight ? weight(uq, lq) : 1.0;
          acc += detJ * w * std::pow(std::abs(val), p_exp);
        }
      }
    }
  }
  return std::pow(acc, 1.0 / p_exp);
}

}  // namespace fracflow
