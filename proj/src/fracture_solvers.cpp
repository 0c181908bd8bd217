#include "fracflow/fracture_solvers.hpp"

#include <algorithm>
#include <cmath>

namespace fracflow {

namespace {

struct GeomPoint {
  SurfaceJet jet;
  FundamentalForms forms;
  NormalFrame frame;
};

GeomPoint geom_at(const FractureScenario& scn, double u) {
  GeomPoint g;
  g.jet = surface_jet(scn.patch, u, scn.v_mid());
  g.forms = fundamental_forms(g.jet);
  g.frame = normal_frame(g.jet);
  return g;
}

double sqrt_detG(const GeomPoint& g, double lambda) {
  return std::sqrt(metric_at(g.jet, g.frame, g.forms, lambda).detG);
}

double qtilde(const FractureScenario& scn,
              const std::function<double(double)>& q, double u, double face_sign) {
  if (!q) return 0.0;
  const double qv = q(u);
  if (qv == 0.0) return 0.0;
  const GeomPoint g = geom_at(scn, u);
  const double h = scn.thickness.h(u, scn.v_mid());
  const double hu = scn.thickness.h_u(u, scn.v_mid());
  const double lam =
      scn.qtilde_eval == QTildeEval::AtBoundary ? face_sign * h : 0.0;
  return qv * std::sqrt(1.0 + hu * hu) * sqrt_detG(g, lam);
}

// 3-point Gauss nodes/weights on [-1, 1].
constexpr double kG3Node = 0.7745966692414834;  // sqrt(3/5)
constexpr double kG3W0 = 8.0 / 9.0;
constexpr double kG3W1 = 5.0 / 9.0;

}  // namespace

double qtilde_plus(const FractureScenario& scn, double u) {
  return qtilde(scn, scn.q_plus, u, +1.0);
}

double qtilde_minus(const FractureScenario& scn, double u) {
  return qtilde(scn, scn.q_minus, u, -1.0);
}

ReducedCoefficients reduced_coefficients(const FractureScenario& scn, double u,
                                         double dWdu_estimate) {
  const GeomPoint g = geom_at(scn, u);
  const double h = scn.thickness.h(u, scn.v_mid());
  const double nodes[3] = {-kG3Node * h, 0.0, kG3Node * h};
  const double weights[3] = {kG3W1 * h, kG3W0 * h, kG3W1 * h};

  ReducedCoefficients rc;
  for (int q = 0; q < 3; ++q) {
    const VariationMetric m = metric_at(g.jet, g.frame, g.forms, nodes[q]);
    const double sdet = std::sqrt(m.detG);
    const double zeta = std::sqrt(m.Ginv(0, 0)) * std::abs(dWdu_estimate);
    const double f = f_beta(scn.params.alpha, scn.params.beta, zeta);
    rc.L11 += weights[q] * f * sdet * m.Ginv(0, 0);
    rc.L12 += weights[q] * f * sdet * m.Ginv(0, 1);
    rc.L22 += weights[q] * f * sdet * m.Ginv(1, 1);
    rc.A += weights[q] * sdet;
  }
  rc.qtilde_plus = qtilde_plus(scn, u);
  rc.qtilde_minus = qtilde_minus(scn, u);
  return rc;
}

FractureSolution2D solve_original(const FractureScenario& scn, const Grid2D& grid,
                                  const PicardConfig& cfg) {
  const double src_density = scn.params.Q / scn.params.omega_vol;

  Coeff2D coeff = [&scn](double u, double lam, const Eigen::Vector2d& gW) {
    const GeomPoint g = geom_at(scn, u);
    const VariationMetric m = metric_at(g.jet, g.frame, g.forms, lam);
    const double zeta = grad_norm_G(Vec3(gW[0], 0.0, gW[1]), m);
    const double f = f_beta(scn.params.alpha, scn.params.beta, zeta);
    const double sdet = std::sqrt(m.detG);
    Eigen::Matrix2d C = Eigen::Matrix2d::Zero();
    C(0, 0) = f * sdet * m.Ginv(0, 0);
    C(1, 1) = f * sdet;
    return C;
  };
  Source2D source = [&scn, src_density](double u, double lam) {
    const GeomPoint g = geom_at(scn, u);
    return src_density * sqrt_detG(g, lam);
  };

  BC2D bc;
  bc.kind[static_cast<int>(Side::Left)] = BC2D::Kind::Dirichlet;
  bc.flux[static_cast<int>(Side::Top)] = [&scn](double u, double) {
    return qtilde_plus(scn, u);
  };
  bc.flux[static_cast<int>(Side::Bottom)] = [&scn](double u, double) {
    return qtilde_minus(scn, u);
  };

  auto assemble = [&](const VectorXd& W) {
    return assemble_2d(grid, coeff, source, bc, &W);
  };

  FractureSolution2D sol;
  sol.W.grid = &grid;
  sol.W.W = VectorXd::Zero(grid.num_nodes());
  sol.stats = picard_solve(assemble, sol.W.W, cfg);
  sol.system = assemble(sol.W.W);
  return sol;
}

namespace {

FractureSolution1D solve_line(const FractureScenario& scn, const Grid1D& grid,
                              const PicardConfig& cfg, const Coeff1D& coeff,
                              const Source1D& source) {
  BC1D bc;  // defaults: W = 0 at the left end, zero flux at the right end
  auto assemble = [&](const VectorXd& W) {
    return assemble_1d(grid, coeff, source, bc, &W);
  };
  FractureSolution1D sol;
  sol.W.grid = &grid;
  sol.W.W = VectorXd::Zero(grid.num_nodes());
  sol.stats = picard_solve(assemble, sol.W.W, cfg);
  sol.system = assemble(sol.W.W);
  return sol;
}

}  // namespace

FractureSolution1D solve_reduced_I(const FractureScenario& scn, const Grid1D& grid,
                                   const PicardConfig& cfg) {
  const double src_density = scn.params.Q / scn.params.omega_vol;
  Coeff1D coeff = [&scn](double u, double dWdu) {
    return reduced_coefficients(scn, u, dWdu).L11;
  };
  Source1D source = [&scn, src_density](double u) {
    const ReducedCoefficients rc = reduced_coefficients(scn, u, 0.0);
    return src_density * rc.A + rc.qtilde_plus + rc.qtilde_minus;
  };
  return solve_line(scn, grid, cfg, coeff, source);
}

FractureSolution1D solve_reduced_II(const FractureScenario& scn, const Grid1D& grid,
                                    const PicardConfig& cfg) {
  const double src_density = scn.params.Q / scn.params.omega_vol;
  Coeff1D coeff = [&scn](double u, double dWdu) {
    const GeomPoint g = geom_at(scn, u);
    const double h = scn.thickness.h(u, scn.v_mid());
    const double sdetg = std::sqrt(g.forms.detg);
    const double g11inv = g.forms.g22 / g.forms.detg;
    const double zeta = std::sqrt(g11inv) * std::abs(dWdu);
    const double f = f_beta(scn.params.alpha, scn.params.beta, zeta);
    return 2.0 * h * f * sdetg * g11inv;
  };
  Source1D source = [&scn, src_density](double u) {
    const GeomPoint g = geom_at(scn, u);
    const double h = scn.thickness.h(u, scn.v_mid());
    return 2.0 * src_density * h * std::sqrt(g.forms.detg) + qtilde_plus(scn, u) +
           qtilde_minus(scn, u);
  };
  return solve_line(scn, grid, cfg, coeff, source);
}

FractureComparison compare_fracture_solutions(const FractureScenario& scn,
                                              const PressureField2D& W2d,
                                              const PressureField& W1d) {
  FractureComparison cmp;

  auto weight = [&scn](double u, double lam) {
    const GeomPoint g = geom_at(scn, u);
    return sqrt_detG(g, lam);
  };
  auto grad_u_point = [&scn, &W1d](double u, double lam,
                                   const Eigen::Vector2d& gW) {
    const GeomPoint g = geom_at(scn, u);
    const VariationMetric m = metric_at(g.jet, g.frame, g.forms, lam);
    return std::sqrt(m.Ginv(0, 0)) * std::abs(gW[0] - W1d.deriv(u));
  };
  auto lambda_point = [](double, double, const Eigen::Vector2d& gW) {
    return std::abs(gW[1]);
  };

  const double n1 = lp_gradient_norm(W2d, 1.5, weight, grad_u_point);
  const double n2 = lp_gradient_norm(W2d, 1.5, weight, lambda_point);
  cmp.l32_grad_u_diff = n1 * n1;
  cmp.l32_W_lambda = n2 * n2;

  double max_diff = 0.0;
  double max_abs = 0.0;
  for (double u : W2d.grid->u) {
    const double wo = W2d.value(u, 0.0);
    max_diff = std::max(max_diff, std::abs(wo - W1d.value(u)));
    max_abs = std::max(max_abs, std::abs(wo));
  }
  cmp.max_rel_diff_on_line = max_abs > 0.0 ? max_diff / max_abs : 0.0;
  return cmp;
}

}  // namespace fracflow
