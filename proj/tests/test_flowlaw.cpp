#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fracflow/flowlaw.hpp"
#include "test_patches.hpp"

#include <cmath>
#include <random>

using namespace fracflow;
using namespace fracflow::testing;

namespace {

// Bisection on beta*zeta*f^2 + alpha*f - 1 = 0, the defining equation of the
// mobility, as an independent reference.
double f_bisect(double alpha, double beta, double zeta) {
  auto res = [&](double f) { return beta * zeta * f * f + alpha * f - 1.0; };
  double lo = 0.0, hi = 1.0 / alpha;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (res(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("mobility closed form at reference points") {
  CHECK(f_beta(1.0, 0.0, 7.0) == 1.0);
  CHECK(f_beta(2.0, 0.5, 0.0) == 0.5);
  CHECK(f_beta(1.0, 1.0, 2.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(f_beta(1.0, 1.0, 2.0) == doctest::Approx(f_bisect(1.0, 1.0, 2.0)).epsilon(1e-12));
}

TEST_CASE("mobility rejects invalid arguments") {
  CHECK_THROWS_AS(f_beta(0.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(f_beta(-1.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(f_beta(1.0, -0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(f_beta(1.0, 0.5, -1.0), std::invalid_argument);
}

TEST_CASE("mobility root residual over a 10^4-point sweep") {
  const double alphas[] = {0.5, 1.0, 2.0};
  const double betas[] = {0.0, 0.1, 1.0, 100.0};
  // zeta = 0 plus a log-spaced ladder up to 1e9
  std::vector<double> zetas{0.0};
  for (int i = 0; i <= 900; ++i) zetas.push_back(std::pow(10.0, -3.0 + i / 75.0));
  int count = 0;
  for (double a : alphas) {
    for (double b : betas) {
      for (double z : zetas) {
        const double f = f_beta(a, b, z);
        CHECK(std::abs(b * z * f * f + a * f - 1.0) <= 1e-12);
        CHECK(f > 0.0);
        CHECK(f <= 1.0 / a + 1e-15);
        ++count;
      }
    }
  }
  CHECK(count >= 10000);
}

TEST_CASE("vanishing Forchheimer coefficient recovers the linear mobility") {
  for (double a : {0.25, 0.5, 1.0, 2.0, 8.0}) {
    for (double z : {0.0, 1.0, 17.5, 1e6}) {
      CHECK(f_beta(a, 0.0, z) == 1.0 / a);
    }
  }
}

TEST_CASE("mobility is nonincreasing in zeta and in beta") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> dz(0.0, 1e4);
  for (int k = 0; k < 1000; ++k) {
    const double a = std::uniform_real_distribution<double>(0.1, 5.0)(rng);
    const double b = std::uniform_real_distribution<double>(0.0, 10.0)(rng);
    double z1 = dz(rng), z2 = dz(rng);
    if (z1 > z2) std::swap(z1, z2);
    CHECK(f_beta(a, b, z2) <= f_beta(a, b, z1) + 1e-15);
    CHECK(f_beta(a, b + 1.0, z2) <= f_beta(a, b, z2) + 1e-15);
  }
}

TEST_CASE("velocity: reference values under the identity metric") {
  const SurfaceJet jet = surface_jet(plane_patch(), 0.0, 0.0);
  const VariationMetric id =
      metric_at(jet, normal_frame(jet), fundamental_forms(jet), 0.0);
  FluidParams pr;
  pr.alpha = 1.0;

  pr.beta = 0.0;
  CHECK(velocity(Vec3::Zero(), id, pr).norm() == doctest::Approx(0.0));
  CHECK((velocity(Vec3(1, 2, 3), id, pr) - Vec3(-1, -2, -3)).norm() < 1e-14);

  pr.beta = 1.0;
  CHECK((velocity(Vec3(2, 0, 0), id, pr) - Vec3(-1, 0, 0)).norm() < 1e-14);
}

TEST_CASE("velocity satisfies the nonlinear momentum balance on random metrics") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> comp(-5.0, 5.0);
  for (const NamedPatch& np : patch_catalog()) {
    const SurfacePatch& p = np.patch;
    for (int k = 0; k < 20; ++k) {
      const double u = std::uniform_real_distribution<double>(p.u0, p.u1)(rng);
      const double v = std::uniform_real_distribution<double>(p.v0, p.v1)(rng);
      const double lam =
          std::uniform_real_distribution<double>(-np.lambda_max, np.lambda_max)(rng);
      const SurfaceJet jet = surface_jet(p, u, v);
      const VariationMetric m =
          metric_at(jet, normal_frame(jet), fundamental_forms(jet), lam);
      FluidParams pr;
      pr.alpha = 1.0 + std::uniform_real_distribution<double>(0.0, 2.0)(rng);
      pr.beta = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
      const Vec3 gradW(comp(rng), comp(rng), comp(rng));
      const Vec3 vvec = velocity(gradW, m, pr);
      // alpha*v + beta*|v|_G*v = -Ginv*gradW, with |v|_G^2 = v^T G v.
      const double vnorm = std::sqrt(vvec.dot(m.G * vvec));
      const Vec3 resid =
          pr.alpha * vvec + pr.beta * vnorm * vvec + m.Ginv * gradW;
      CAPTURE(np.name);
      CHECK(resid.norm() < 1e-10 * (1.0 + gradW.norm()));
    }
  }
}

TEST_CASE("monotonicity gap is zero for identical arguments") {
  FluidParams pr;
  pr.alpha = 1.0;
  pr.beta = 2.0;
  CHECK(monotonicity_gap(Vec3(1, 2, 3), Vec3(1, 2, 3), pr) == doctest::Approx(0.0));
}

TEST_CASE("monotonicity gap is nonnegative over 10^4 random pairs") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> comp(-1e3, 1e3);
  const double alphas[] = {0.5, 1.0, 2.0};
  const double betas[] = {0.0, 0.1, 1.0, 100.0};
  int count = 0;
  for (double a : alphas) {
    for (double b : betas) {
      FluidParams pr;
      pr.alpha = a;
      pr.beta = b;
      for (int k = 0; k < 900; ++k) {
        const Vec3 e1(comp(rng), comp(rng), comp(rng));
        const Vec3 e2(comp(rng), comp(rng), comp(rng));
        CHECK(monotonicity_gap(e1, e2, pr) >= -1e-12);
        ++count;
      }
    }
  }
  CHECK(count >= 10000);
}
