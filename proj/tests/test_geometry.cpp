#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fracflow/geometry.hpp"
#include "test_patches.hpp"

#include <cmath>
#include <random>

using namespace fracflow;
using namespace fracflow::testing;

namespace {

double rand_in(std::mt19937& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

}  // namespace

TEST_CASE("surface jet on the flat plane") {
  const SurfacePatch p = plane_patch();
  const SurfaceJet jet = surface_jet(p, 0.3, -0.2);
  CHECK(jet.r_u.isApprox(Vec3(1, 0, 0)));
  CHECK(jet.r_v.isApprox(Vec3(0, 1, 0)));
  CHECK(jet.r_uu.norm() == doctest::Approx(0.0));
  CHECK(jet.r_uv.norm() == doctest::Approx(0.0));
  CHECK(jet.r_vv.norm() == doctest::Approx(0.0));
}

TEST_CASE("surface jet of the half-circle profile at the apex") {
  const SurfacePatch p = halfcircle_patch();
  const SurfaceJet jet = surface_jet(p, 0.0, 0.0);
  CHECK((jet.r_u - Vec3(1, 0, 0)).norm() < 1e-14);
  CHECK((jet.r_uu - Vec3(0, 0, -1)).norm() < 1e-14);
}

TEST_CASE("surface jet of the unit cylinder at u = 0") {
  const SurfacePatch p = cylinder_patch();
  const SurfaceJet jet = surface_jet(p, 0.0, 0.0);
  CHECK((jet.r_u - Vec3(0, 0, 1)).norm() < 1e-14);
  CHECK((jet.r_uu - Vec3(-1, 0, 0)).norm() < 1e-14);
}

TEST_CASE("surface jet rejects out-of-domain coordinates") {
  const SurfacePatch p = halfcircle_patch();
  CHECK_THROWS_AS(surface_jet(p, 0.95, 0.0), DomainError);
  CHECK_THROWS_AS(surface_jet(p, 0.0, 2.0), DomainError);
}

TEST_CASE("analytic derivatives agree with central finite differences") {
  std::mt19937 rng(42);
  for (const NamedPatch& np : patch_catalog()) {
    const SurfacePatch& p = np.patch;
    for (int k = 0; k < 20; ++k) {
      const double span_u = p.u1 - p.u0, span_v = p.v1 - p.v0;
      const double u = rand_in(rng, p.u0 + 0.05 * span_u, p.u1 - 0.05 * span_u);
      const double v = rand_in(rng, p.v0 + 0.05 * span_v, p.v1 - 0.05 * span_v);
      const SurfaceJet a = surface_jet(p, u, v);
      const SurfaceJet f = surface_jet_fd(p, u, v, 1e-5);
      CAPTURE(np.name);
      CHECK((a.r_u - f.r_u).norm() < 1e-7);
      CHECK((a.r_v - f.r_v).norm() < 1e-7);
      CHECK((a.r_uu - f.r_uu).norm() < 1e-4);
      CHECK((a.r_uv - f.r_uv).norm() < 1e-4);
      CHECK((a.r_vv - f.r_vv).norm() < 1e-4);
    }
  }
}

TEST_CASE("fundamental forms of the plane") {
  const SurfaceJet jet = surface_jet(plane_patch(), 0.1, 0.1);
  const FundamentalForms ff = fundamental_forms(jet);
  CHECK(ff.g11 == doctest::Approx(1.0));
  CHECK(ff.g12 == doctest::Approx(0.0));
  CHECK(ff.g22 == doctest::Approx(1.0));
  CHECK(ff.K == doctest::Approx(0.0));
  CHECK(ff.H == doctest::Approx(0.0));
}

TEST_CASE("fundamental forms of the unit cylinder") {
  const SurfaceJet jet = surface_jet(cylinder_patch(), 1.1, 0.3);
  const FundamentalForms ff = fundamental_forms(jet);
  CHECK(ff.g11 == doctest::Approx(1.0));
  CHECK(ff.g12 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ff.g22 == doctest::Approx(1.0));
  CHECK(ff.l == doctest::Approx(1.0));
  CHECK(std::abs(ff.m) < 1e-12);
  CHECK(std::abs(ff.n_c) < 1e-12);
  CHECK(std::abs(ff.K) < 1e-12);
  CHECK(ff.H == doctest::Approx(0.5));
}

TEST_CASE("fundamental forms of a sphere give the classical curvatures") {
  const double rho = 2.0;
  std::mt19937 rng(7);
  const SurfacePatch p = sphere_patch(rho);
  for (int k = 0; k < 10; ++k) {
    const double u = rand_in(rng, p.u0, p.u1);
    const double v = rand_in(rng, p.v0, p.v1);
    const FundamentalForms ff = fundamental_forms(surface_jet(p, u, v));
    CHECK(ff.K == doctest::Approx(1.0 / (rho * rho)).epsilon(1e-9));
    CHECK(std::abs(ff.H) == doctest::Approx(1.0 / rho).epsilon(1e-9));
  }
}

TEST_CASE("normal frame: unit length and orthogonality of the derivatives") {
  std::mt19937 rng(3);
  for (const NamedPatch& np : patch_catalog()) {
    const SurfacePatch& p = np.patch;
    for (int k = 0; k < 25; ++k) {
      const double u = rand_in(rng, p.u0, p.u1);
      const double v = rand_in(rng, p.v0, p.v1);
      const NormalFrame fr = normal_frame(p, u, v);
      CAPTURE(np.name);
      CHECK(std::abs(fr.n.norm() - 1.0) < 1e-12);
      CHECK(std::abs(fr.n.dot(fr.n_u)) < 1e-10);
      CHECK(std::abs(fr.n.dot(fr.n_v)) < 1e-10);
    }
  }
}

TEST_CASE("normal frame matches finite differences of the normal") {
  std::mt19937 rng(5);
  for (const NamedPatch& np : patch_catalog()) {
    const SurfacePatch& p = np.patch;
    const double du = 1e-6 * (p.u1 - p.u0);
    const double dv = 1e-6 * (p.v1 - p.v0);
    for (int k = 0; k < 10; ++k) {
      const double span_u = p.u1 - p.u0, span_v = p.v1 - p.v0;
      const double u = rand_in(rng, p.u0 + 0.05 * span_u, p.u1 - 0.05 * span_u);
      const double v = rand_in(rng, p.v0 + 0.05 * span_v, p.v1 - 0.05 * span_v);
      const NormalFrame fr = normal_frame(p, u, v);
      const Vec3 nu_fd = (normal_frame(p, u + du, v).n - normal_frame(p, u - du, v).n) / (2 * du);
      const Vec3 nv_fd = (normal_frame(p, u, v + dv).n - normal_frame(p, u, v - dv).n) / (2 * dv);
      CAPTURE(np.name);
      CHECK((fr.n_u - nu_fd).norm() < 1e-6 * (1.0 + fr.n_u.norm()));
      CHECK((fr.n_v - nv_fd).norm() < 1e-6 * (1.0 + fr.n_v.norm()));
    }
  }
}

TEST_CASE("graph patches have the closed-form normal") {
  const double c = 0.5;
  const NormalFrame fr = normal_frame(tilted_patch(c), 0.4, 0.1);
  const Vec3 expect = Vec3(-c, 0, 1).normalized();
  CHECK((fr.n - expect).norm() < 1e-13);
}

TEST_CASE("offset metric of the plane is the identity") {
  const SurfaceJet jet = surface_jet(plane_patch(), 0.0, 0.0);
  const NormalFrame fr = normal_frame(jet);
  const FundamentalForms ff = fundamental_forms(jet);
  const VariationMetric m = metric_at(jet, fr, ff, 0.37);
  CHECK((m.G - Mat3::Identity()).norm() < 1e-14);
  CHECK(m.detG == doctest::Approx(1.0));
}

TEST_CASE("offset metric of the unit cylinder is diag((1-lambda)^2, 1, 1)") {
  const SurfaceJet jet = surface_jet(cylinder_patch(), 0.8, 0.0);
  const NormalFrame fr = normal_frame(jet);
  const FundamentalForms ff = fundamental_forms(jet);
  const double lam = 0.3;
  const VariationMetric m = metric_at(jet, fr, ff, lam);
  Mat3 expect = Mat3::Identity();
  expect(0, 0) = (1.0 - lam) * (1.0 - lam);
  CHECK((m.G - expect).norm() < 1e-12);
  CHECK(m.detG == doctest::Approx((1.0 - lam) * (1.0 - lam)));
}

TEST_CASE("metric block structure, inverse consistency, and zero-offset limit") {
  std::mt19937 rng(11);
  for (const NamedPatch& np : patch_catalog()) {
    const SurfacePatch& p = np.patch;
    for (int k = 0; k < 20; ++k) {
      const double u = rand_in(rng, p.u0, p.u1);
      const double v = rand_in(rng, p.v0, p.v1);
      const double lam = rand_in(rng, -np.lambda_max, np.lambda_max);
      const SurfaceJet jet = surface_jet(p, u, v);
      const NormalFrame fr = normal_frame(jet);
      const FundamentalForms ff = fundamental_forms(jet);
      const VariationMetric m = metric_at(jet, fr, ff, lam);
      CAPTURE(np.name);
      CHECK(m.G(0, 2) == 0.0);
      CHECK(m.G(1, 2) == 0.0);
      CHECK(m.G(2, 2) == 1.0);
      CHECK(m.detG > 0.0);
      CHECK((m.Ginv * m.G - Mat3::Identity()).norm() < 1e-12);

      const VariationMetric m0 = metric_at(jet, fr, ff, 0.0);
      CHECK(m0.G(0, 0) == ff.g11);
      CHECK(m0.G(0, 1) == ff.g12);
      CHECK(m0.G(1, 1) == ff.g22);
    }
  }
}

TEST_CASE("metric degeneracy beyond the focal distance is a hard error") {
  const SurfaceJet jet = surface_jet(cylinder_patch(), 0.8, 0.0);
  const NormalFrame fr = normal_frame(jet);
  const FundamentalForms ff = fundamental_forms(jet);
  CHECK_THROWS_AS(metric_at(jet, fr, ff, 1.0), MetricDegeneracyError);
}

TEST_CASE("determinant quartic coefficients on the plane and the cylinder") {
  {
    const SurfaceJet jet = surface_jet(plane_patch(), 0.1, 0.2);
    const QuarticCoeffs q = detG_quartic(fundamental_forms(jet), normal_frame(jet));
    CHECK(q.c[0] == doctest::Approx(1.0));
    for (int i = 1; i < 5; ++i) CHECK(std::abs(q.c[i]) < 1e-12);
  }
  {
    const SurfaceJet jet = surface_jet(cylinder_patch(), 2.0, -0.5);
    const QuarticCoeffs q = detG_quartic(fundamental_forms(jet), normal_frame(jet));
    CHECK(q.c[0] == doctest::Approx(1.0));
    CHECK(q.c[1] == doctest::Approx(-2.0));
    CHECK(q.c[2] == doctest::Approx(1.0));
    CHECK(std::abs(q.c[3]) < 1e-12);
    CHECK(std::abs(q.c[4]) < 1e-12);
  }
}

TEST_CASE("determinant quartic matches the brute-force Gram determinant") {
  std::mt19937 rng(2024);
  for (const NamedPatch& np : patch_catalog()) {
    const SurfacePatch& p = np.patch;
    for (int k = 0; k < 100; ++k) {
      const double u = rand_in(rng, p.u0, p.u1);
      const double v = rand_in(rng, p.v0, p.v1);
      const double lam = rand_in(rng, -np.lambda_max, np.lambda_max);
      const SurfaceJet jet = surface_jet(p, u, v);
      const NormalFrame fr = normal_frame(jet);
      const FundamentalForms ff = fundamental_forms(jet);
      const QuarticCoeffs q = detG_quartic(ff, fr);

      const double brute = gram_det(jet, fr, lam);
      const double quart = q.eval(lam);
      const double direct = metric_at(jet, fr, ff, lam).detG;
      CAPTURE(np.name);
      CHECK(std::abs(quart - brute) <= 1e-9 * std::abs(brute));
      CHECK(std::abs(direct - brute) <= 1e-9 * std::abs(brute));
    }
  }
}

TEST_CASE("gradient norm under the offset metric") {
  const SurfaceJet jet = surface_jet(plane_patch(), 0.0, 0.0);
  const VariationMetric id =
      metric_at(jet, normal_frame(jet), fundamental_forms(jet), 0.2);
  CHECK(grad_norm_G(Vec3::Zero(), id) == doctest::Approx(0.0));
  CHECK(grad_norm_G(Vec3(3, 4, 0), id) == doctest::Approx(5.0));

  const SurfaceJet cj = surface_jet(cylinder_patch(), 1.0, 0.0);
  const VariationMetric cm =
      metric_at(cj, normal_frame(cj), fundamental_forms(cj), 0.5);
  CHECK(grad_norm_G(Vec3(1, 0, 0), cm) == doctest::Approx(2.0));
}
