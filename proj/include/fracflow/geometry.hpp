#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <stdexcept>
#include <string>

namespace fracflow {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct DegenerateSurfaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when det(G) <= 0, i.e. the thickness exceeds the focal distance of
// the barycentric surface at some (u, v, lambda).
struct MetricDegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Analytic surface r(u,v) with closed-form first and second derivatives,
/// defined on the rectangle [u0,u1] x [v0,v1].
struct SurfacePatch {
  std::function<Vec3(double, double)> r;
  std::function<Vec3(double, double)> r_u, r_v;
  std::function<Vec3(double, double)> r_uu, r_uv, r_vv;
  double u0 = 0.0, u1 = 1.0;
  double v0 = -1.0, v1 = 1.0;

  bool contains(double u, double v) const {
    return u >= u0 && u <= u1 && v >= v0 && v <= v1;
  }
};

/// Half-thickness profile h(u,v) > 0; the fracture thickness is 2h.
struct ThicknessProfile {
  std::function<double(double, double)> h;
  std::function<double(double, double)> h_u, h_v;
};

/// All derivative vectors of a patch frozen at one (u,v).
struct SurfaceJet {
  double u = 0.0, v = 0.0;
  Vec3 point;
  Vec3 r_u, r_v, r_uu, r_uv, r_vv;
};

/// First/second fundamental form coefficients plus curvatures.
struct FundamentalForms {
  double g11, g12, g22;   // first fundamental form
  double l, m, n_c;       // second fundamental form
  double detg;            // g11*g22 - g12^2
  double K;               // Gaussian curvature
  double H;               // mean curvature
};

/// Unit normal n = (r_u x r_v)/|r_u x r_v| and its exact partials.
struct NormalFrame {
  Vec3 n;
  Vec3 n_u, n_v;
};

/// Induced metric of the normal variation R = r + lambda*n at one point.
/// Block structure: G13 = G23 = 0, G33 = 1.
struct VariationMetric {
  Mat3 G;
  Mat3 Ginv;
  double detG;
  double lambda;
};

/// Coefficients c0..c4 of det(G) as a quartic polynomial in lambda.
struct QuarticCoeffs {
  std::array<double, 5> c;

  double eval(double lambda) const {
    return c[0] + lambda * (c[1] + lambda * (c[2] + lambda * (c[3] + lambda * c[4])));
  }
};

SurfaceJet surface_jet(const SurfacePatch& patch, double u, double v);

FundamentalForms fundamental_forms(const SurfaceJet& jet);

NormalFrame normal_frame(const SurfaceJet& jet);
NormalFrame normal_frame(const SurfacePatch& patch, double u, double v);

VariationMetric metric_at(const SurfaceJet& jet, const NormalFrame& frame,
                          const FundamentalForms& forms, double lambda);

QuarticCoeffs detG_quartic(const FundamentalForms& forms, const NormalFrame& frame);

/// sqrt(gradW^T Ginv gradW) with gradW = (d_u W, d_v W, d_lambda W).
double grad_norm_G(const Vec3& gradW, const VariationMetric& metric);

/// Central finite-difference jet of r only, for validating analytic
/// derivative evaluators.
SurfaceJet surface_jet_fd(const SurfacePatch& patch, double u, double v,
                          double step);

}  // namespace fracflow
