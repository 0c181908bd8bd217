#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fracflow/fracture_solvers.hpp"
#include "fracflow/scenarios.hpp"
#include "test_patches.hpp"

#include <cmath>
#include <vector>

using namespace fracflow;

namespace {

Grid2D cross_section_grid(const FractureScenario& scn, int n_u, int n_lambda) {
  const Grid1D g1 = Grid1D::uniform(scn.u0(), scn.u1(), n_u);
  return Grid2D::mapped(g1.nodes, n_lambda, [&scn](double u) {
    return scn.thickness.h(u, scn.v_mid());
  });
}

double fit_order(const std::vector<double>& hs, const std::vector<double>& errs) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(hs.size());
  for (int i = 0; i < n; ++i) {
    const double x = std::log(hs[i]), y = std::log(errs[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("zero data gives the zero pressure in all three models") {
  FractureScenario scn = make_flat(1.0, 0.1, 0.0, 0.0);
  scn.params.Q = 0.0;
  const Grid1D g1 = Grid1D::uniform(scn.u0(), scn.u1(), 50);
  const Grid2D g2 = cross_section_grid(scn, 50, 4);
  CHECK(solve_original(scn, g2).W.W.lpNorm<Eigen::Infinity>() < 1e-13);
  CHECK(solve_reduced_I(scn, g1).W.W.lpNorm<Eigen::Infinity>() < 1e-13);
  CHECK(solve_reduced_II(scn, g1).W.W.lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("flat-geometry line coefficients and face loads") {
  const FractureScenario scn = make_flat(1.0, 0.05, 0.0, 3.0);
  const ReducedCoefficients rc = reduced_coefficients(scn, 0.4, 0.7);
  const double h = 0.05;
  CHECK(rc.L11 == doctest::Approx(2.0 * h / scn.params.alpha).epsilon(1e-12));
  CHECK(rc.A == doctest::Approx(2.0 * h).epsilon(1e-12));
  CHECK(qtilde_plus(scn, 0.4) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(qtilde_minus(scn, 0.4) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("curved-geometry line coefficients match the analytic thickness integrals") {
  // Unit-cylinder cross-section: sqrt|G| = 1 - lambda, G^11 = (1-lambda)^-2.
  FractureScenario scn;
  scn.patch = fracflow::testing::cylinder_patch();
  scn.thickness = constant_thickness(0.1);
  scn.params.alpha = 1.0;
  scn.params.beta = 0.0;
  scn.q_plus = [](double) { return 0.0; };
  scn.q_minus = [](double) { return 0.0; };
  const ReducedCoefficients rc = reduced_coefficients(scn, 1.0, 0.0);
  const double h = 0.1;
  CHECK(rc.A == doctest::Approx(2.0 * h).epsilon(1e-12));
  CHECK(rc.L11 == doctest::Approx(std::log((1.0 + h) / (1.0 - h))).epsilon(1e-5));
}

TEST_CASE("flat fracture: the two line models coincide for every beta") {
  for (double beta : {0.0, 0.5, 10.0}) {
    const FractureScenario scn = make_flat(1.0, 0.05, beta, 1.0);
    const Grid1D g1 = Grid1D::uniform(scn.u0(), scn.u1(), 200);
    const VectorXd w1 = solve_reduced_I(scn, g1).W.W;
    const VectorXd w2 = solve_reduced_II(scn, g1).W.W;
    CHECK((w1 - w2).lpNorm<Eigen::Infinity>() <
          1e-10 * w2.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("flat fracture: closed-form profile") {
  const double L = 1.0, h = 0.05, q = 1.0;
  const FractureScenario scn = make_flat(L, h, 0.0, q);
  const double a = scn.params.alpha;
  const double s = scn.params.Q / scn.params.omega_vol + q / h;
  auto exact = [&](double u) { return a * s * (L * u - 0.5 * u * u); };

  const Grid1D g1 = Grid1D::uniform(0.0, L, 400);
  const FractureSolution1D red2 = solve_reduced_II(scn, g1);
  double max_err = 0.0, max_w = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double u = L * i / 1000.0;
    max_err = std::max(max_err, std::abs(red2.W.value(u) - exact(u)));
    max_w = std::max(max_w, std::abs(exact(u)));
  }
  // Dominated by piecewise-linear interpolation between nodes:
  // h^2/8 * |W''| = (1/400)^2/8 * alpha*s.
  CHECK(max_err < 3e-6 * max_w);

  // Cross-section model on a modest grid against the same thickness-averaged
  // closed form, compared on the barycentric line.
  const Grid2D g2 = cross_section_grid(scn, 100, 8);
  const FractureSolution2D orig = solve_original(scn, g2);
  double max_line_err = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double u = L * i / 200.0;
    max_line_err = std::max(max_line_err,
                            std::abs(orig.W.value(u, 0.0) - exact(u)));
  }
  CHECK(max_line_err < 2e-3 * max_w);
}

TEST_CASE("tilted plane: closed form and second-order convergence") {
  const double c = 1.0, L = 1.0, h = 0.05;
  const FractureScenario scn = make_tilted_plane(c, L, h, 0.0, 0.0);
  const double a = scn.params.alpha;
  const double src = scn.params.Q / scn.params.omega_vol;
  auto exact = [&](double u) {
    return a * (1.0 + c * c) * src * (L * u - 0.5 * u * u);
  };
  std::vector<double> hs, errs;
  for (int n : {25, 50, 100, 200}) {
    const Grid1D g1 = Grid1D::uniform(0.0, L, n);
    const FractureSolution1D sol = solve_reduced_II(scn, g1);
    double max_err = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double u = L * i / 2000.0;
      max_err = std::max(max_err, std::abs(sol.W.value(u) - exact(u)));
    }
    hs.push_back(L / n);
    errs.push_back(max_err);
  }
  CHECK(errs.back() < 1e-6);
  const double order = fit_order(hs, errs);
  CHECK(order > 1.8);
  CHECK(order < 2.2);
}

TEST_CASE("half-circle arch, thin fracture: line models track the cross-section") {
  const FractureScenario scn = make_halfcircle(0.025, 0.1, 10.0);
  const Grid1D g1 = Grid1D::uniform(scn.u0(), scn.u1(), 200);
  const Grid2D g2 = cross_section_grid(scn, 200, 8);
  const FractureSolution2D orig = solve_original(scn, g2);
  const FractureSolution1D red1 = solve_reduced_I(scn, g1);
  const FractureSolution1D red2 = solve_reduced_II(scn, g1);

  const FractureComparison c1 = compare_fracture_solutions(scn, orig.W, red1.W);
  const FractureComparison c2 = compare_fracture_solutions(scn, orig.W, red2.W);
  CHECK(c1.max_rel_diff_on_line <= 0.02);
  CHECK(c2.max_rel_diff_on_line <= 0.02);

  // Pressure rises monotonically away from the drained edge.
  CHECK(orig.W.W[g2.node(0, g2.ns / 2)] == 0.0);
  for (int i = 0; i < g2.nu; ++i) {
    CHECK(orig.W.W[g2.node(i + 1, g2.ns / 2)] >=
          orig.W.W[g2.node(i, g2.ns / 2)] - 1e-12);
  }
}

TEST_CASE("halving the face influx shrinks the model-difference norms") {
  const FractureScenario full = make_halfcircle(0.025, 0.1, 10.0);
  const FractureScenario half = make_halfcircle(0.025, 0.1, 5.0);
  const Grid1D g1 = Grid1D::uniform(full.u0(), full.u1(), 120);

  auto norms = [&](const FractureScenario& scn) {
    const Grid2D g2 = cross_section_grid(scn, 120, 6);
    const FractureSolution2D orig = solve_original(scn, g2);
    const FractureSolution1D red1 = solve_reduced_I(scn, g1);
    return compare_fracture_solutions(scn, orig.W, red1.W);
  };
  const FractureComparison cf = norms(full);
  const FractureComparison ch = norms(half);
  CHECK(ch.l32_grad_u_diff < cf.l32_grad_u_diff);
  CHECK(ch.l32_W_lambda < cf.l32_W_lambda);
}

TEST_CASE("source-only flat fracture has a thickness-independent cross-section solution") {
  const FractureScenario scn = make_flat(1.0, 0.1, 0.0, 0.0);
  const Grid2D g2 = cross_section_grid(scn, 80, 8);
  const FractureSolution2D orig = solve_original(scn, g2);
  const Grid1D g1 = Grid1D::uniform(0.0, 1.0, 80);
  const FractureSolution1D red1 = solve_reduced_I(scn, g1);
  const FractureComparison c = compare_fracture_solutions(scn, orig.W, red1.W);
  CHECK(c.l32_W_lambda < 1e-12);
}

TEST_CASE("nonnegative data give nonnegative pressure, pinned at the well edge") {
  const FractureScenario scn = make_sine2(0.1, 10.0);
  const Grid1D g1 = Grid1D::uniform(scn.u0(), scn.u1(), 150);
  for (const FractureSolution1D& sol :
       {solve_reduced_I(scn, g1), solve_reduced_II(scn, g1)}) {
    CHECK(sol.W.W[0] == 0.0);
    CHECK(sol.W.W.minCoeff() >= 0.0);
  }
}
