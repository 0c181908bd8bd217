#pragma once

#include "fracflow/discretization.hpp"
#include "fracflow/flowlaw.hpp"
#include "fracflow/geometry.hpp"

namespace fracflow {

/// Where the metric weight of the face flux terms q~ is evaluated across the
/// thickness: at the faces lambda = +/-h, or at the mid-surface lambda = 0.
enum class QTildeEval { AtBoundary, AtMidplane };

/// A fracture-only problem on a v-invariant surface patch: pressure W on the
/// (u, lambda) cross-section (or its barycentric line), zero Dirichlet at
/// u = u0 (the well edge), prescribed influx q+/q- on the top/bottom faces,
/// zero flux at u = u1, and volumetric source Q/|Omega|.
struct FractureScenario {
  SurfacePatch patch;          // v-invariant: all v-derivatives vanish
  ThicknessProfile thickness;  // h = h(u)
  FluidParams params;
  std::function<double(double)> q_plus;   // influx per unit face area, >0 into the fracture
  std::function<double(double)> q_minus;
  QTildeEval qtilde_eval = QTildeEval::AtBoundary;

  double u0() const { return patch.u0; }
  double u1() const { return patch.u1; }
  double v_mid() const { return 0.5 * (patch.v0 + patch.v1); }
};

/// Thickness-integrated coefficients of the line model, all by 3-point Gauss
/// quadrature in lambda over [-h, h]:
///   Lij = int f_beta(zeta) sqrt|G| G^ij dlambda,  A = int sqrt|G| dlambda,
/// with zeta = sqrt(G^11) |dWdu| (gradient assumed lambda-independent).
struct ReducedCoefficients {
  double L11 = 0.0;
  double L12 = 0.0;
  double L22 = 0.0;
  double A = 0.0;
  double qtilde_plus = 0.0;
  double qtilde_minus = 0.0;
};

/// Face flux per unit u after metric weighting: q~ = q sqrt(1 + h_u^2) sqrt|G|.
double qtilde_plus(const FractureScenario& scn, double u);
double qtilde_minus(const FractureScenario& scn, double u);

ReducedCoefficients reduced_coefficients(const FractureScenario& scn, double u,
                                         double dWdu_estimate);

struct FractureSolution1D {
  PressureField W;
  PicardStats stats;
  SparseSystem system;  // assembled at the converged iterate
};

struct FractureSolution2D {
  PressureField2D W;
  PicardStats stats;
  SparseSystem system;
};

/// Cross-section model: -d_u(f sqrt|G| G^11 d_u W) - d_l(f sqrt|G| d_l W)
///                        = sqrt|G| Q/|Omega|
/// with f = f_beta(sqrt(G^11 W_u^2 + W_l^2)). The full lambda-dependent
/// metric is used for every geometry.
FractureSolution2D solve_original(const FractureScenario& scn, const Grid2D& grid,
                                  const PicardConfig& cfg = {});

/// Line model with thickness-quadrature coefficients:
///   -d_u(L11 d_u W) = (Q/|Omega|) A + q~+ + q~-.
FractureSolution1D solve_reduced_I(const FractureScenario& scn, const Grid1D& grid,
                                   const PicardConfig& cfg = {});

/// Line model with the metric frozen at the mid-surface (lambda = 0):
///   -d_u(2h f sqrt|g| g^11 d_u W) = 2 (Q/|Omega|) h sqrt|g| + q~+ + q~-,
/// f = f_beta(sqrt(g^11) |W_u|).
FractureSolution1D solve_reduced_II(const FractureScenario& scn, const Grid1D& grid,
                                    const PicardConfig& cfg = {});

/// Difference measures between a cross-section solution and a line solution
/// (the latter extended constantly in lambda):
///  - l32_grad_u_diff: squared L^{3/2} norm of the metric-weighted u-gradient
///    difference over the cross-section,
///  - l32_W_lambda: squared L^{3/2} norm of the transverse derivative of the
///    cross-section solution,
///  - max_rel_diff_on_line: max_u |W2d(u, 0) - W1d(u)| / max_u |W2d(u, 0)|.
struct FractureComparison {
  double l32_grad_u_diff = 0.0;
  double l32_W_lambda = 0.0;
  double max_rel_diff_on_line = 0.0;
};

FractureComparison compare_fracture_solutions(const FractureScenario& scn,
                                              const PressureField2D& W2d,
                                              const PressureField& W1d);

}  // namespace fracflow
