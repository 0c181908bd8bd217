#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracflow {

using Eigen::VectorXd;
using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct AssemblyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IterationError : std::runtime_error {
  std::vector<double> residual_history;
  IterationError(const std::string& msg, std::vector<double> history)
      : std::runtime_error(msg), residual_history(std::move(history)) {}
};

/// Nodes u_0 < ... < u_N on the barycentric line.
struct Grid1D {
  std::vector<double> nodes;

  static Grid1D uniform(double a, double b, int n_elems);

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elems() const { return num_nodes() - 1; }
  double length() const { return nodes.back() - nodes.front(); }
};

/// Structured quad grid on the fracture cross-section: u-columns times
/// lambda-levels, with lambda = s * h(u) for levels s in [-1, 1].
struct Grid2D {
  std::vector<double> u;       // nu+1 column abscissae
  std::vector<double> s;       // ns+1 levels in [-1, 1]
  std::vector<double> lambda;  // nodal lambda, index node(i, j)
  int nu = 0, ns = 0;          // element counts

  static Grid2D mapped(std::vector<double> u_nodes, int n_levels,
                       const std::function<double(double)>& half_thickness);

  int node(int i, int j) const { return j * (nu + 1) + i; }
  int num_nodes() const { return (nu + 1) * (ns + 1); }
};

/// Sparse linear system with Dirichlet constraints applied by row/column
/// elimination. The unconstrained operator is kept for flux extraction.
struct SparseSystem {
  SparseMat A;    // constrained
  VectorXd b;     // constrained rhs
  SparseMat A0;   // unconstrained operator
  VectorXd b0;    // unconstrained load
  std::vector<std::pair<int, double>> dirichlet;

  static SparseSystem build(int n, const std::vector<Triplet>& triplets,
                            const VectorXd& load,
                            const std::vector<std::pair<int, double>>& dirichlet);

  VectorXd solve() const;

  /// A0 x - b0; at Dirichlet rows these are the discrete boundary fluxes.
  VectorXd reactions(const VectorXd& x) const { return A0 * x - b0; }

  double residual_norm(const VectorXd& x) const { return (A * x - b).norm(); }
};

struct PicardConfig {
  double rel_tol = 1e-8;
  int max_iter = 200;
  double relaxation = 1.0;  // in (0, 1]; 0.5 retried automatically on failure
};

struct PicardStats {
  int iterations = 0;  // number of linear solves
  double final_residual = 0.0;
  double final_update = 0.0;
  std::vector<double> residual_history;
};

/// Lagged-coefficient fixed point: assemble(W_k) -> linear system -> W_{k+1},
/// relaxed by cfg.relaxation. Converged when the relative residual of the
/// current iterate in the freshly assembled system, or the relative update,
/// drops below rel_tol.
PicardStats picard_solve(const std::function<SparseSystem(const VectorXd&)>& assemble,
                         VectorXd& W, const PicardConfig& cfg);

// ---------------------------------------------------------------------------
// 1-D assembly: -(c(u, W') W')' = source(u) on the grid, piecewise linear.

using Coeff1D = std::function<double(double u, double dWdu)>;
using Source1D = std::function<double(double u)>;

struct BC1D {
  bool left_dirichlet = true;
  double left_value = 0.0;
  double left_flux = 0.0;  // boundary load when not Dirichlet
  bool right_dirichlet = false;
  double right_value = 0.0;
  double right_flux = 0.0;
};

SparseSystem assemble_1d(const Grid1D& grid, const Coeff1D& coeff,
                         const Source1D& source, const BC1D& bc,
                         const VectorXd* W_prev = nullptr);

// ---------------------------------------------------------------------------
// 2-D assembly on Grid2D: -sum_ij d_i(C_ij d_j W) = source in (u, lambda),
// bilinear quads, 2x2 Gauss.

using Coeff2D =
    std::function<Eigen::Matrix2d(double u, double lam, const Eigen::Vector2d& gradW)>;
using Source2D = std::function<double(double u, double lam)>;

enum class Side { Left = 0, Right = 1, Bottom = 2, Top = 3 };

struct BC2D {
  enum class Kind { Neumann, Dirichlet };
  std::array<Kind, 4> kind{Kind::Neumann, Kind::Neumann, Kind::Neumann, Kind::Neumann};
  // Dirichlet value as function of (u, lambda).
  std::array<std::function<double(double, double)>, 4> value{};
  // Boundary load: per unit u on Top/Bottom (metric-weighted flux q~),
  // per unit lambda on Left/Right.
  std::array<std::function<double(double, double)>, 4> flux{};
};

SparseSystem assemble_2d(const Grid2D& grid, const Coeff2D& coeff,
                         const Source2D& source, const BC2D& bc,
                         const VectorXd* W_prev = nullptr);

// ---------------------------------------------------------------------------
// Pressure fields and norms.

struct PressureField {
  const Grid1D* grid = nullptr;
  VectorXd W;

  double value(double u) const;
  double deriv(double u) const;
};

struct PressureField2D {
  const Grid2D* grid = nullptr;
  VectorXd W;

  /// Value at (u, s) with s in [-1, 1] the relative thickness coordinate.
  double value(double u, double s) const;
  /// In-plane derivative d_u W at fixed s (along the mapped grid line).
  double deriv_u(double u, double s) const;
};

/// (integral |W'|^p w(u) du)^(1/p); unit weight when w is empty.
double lp_gradient_norm(const PressureField& field, double p_exp,
                        const std::function<double(double)>& weight = {});

/// (integral point(u, lam, gradW)^p w(u, lam) du dlam)^(1/p) over the 2-D
/// grid; point defaults to |gradW|, w to 1.
double lp_gradient_norm(
    const PressureField2D& field, double p_exp,
    const std::function<double(double, double)>& weight = {},
    const std::function<double(double, double, const Eigen::Vector2d&)>& point = {});

}  // namespace fracflow
