#include "fracflow/geometry.hpp"

#include <cmath>
#include <sstream>

namespace fracflow {

SurfaceJet surface_jet(const SurfacePatch& patch, double u, double v) {
  if (!patch.contains(u, v)) {
    std::ostringstream os;
    os << "surface_jet: (" << u << ", " << v << ") outside patch domain ["
       << patch.u0 << ", " << patch.u1 << "] x [" << patch.v0 << ", "
       << patch.v1 << "]";
    throw DomainError(os.str());
  }
  SurfaceJet jet;
  jet.u = u;
  jet.v = v;
  jet.point = patch.r(u, v);
  jet.r_u = patch.r_u(u, v);
  jet.r_v = patch.r_v(u, v);
  jet.r_uu = patch.r_uu(u, v);
  jet.r_uv = patch.r_uv(u, v);
  jet.r_vv = patch.r_vv(u, v);
  return jet;
}

FundamentalForms fundamental_forms(const SurfaceJet& jet) {
  FundamentalForms f;
  f.g11 = jet.r_u.dot(jet.r_u);
  f.g12 = jet.r_u.dot(jet.r_v);
  f.g22 = jet.r_v.dot(jet.r_v);
  f.detg = f.g11 * f.g22 - f.g12 * f.g12;
  if (f.detg <= 0.0) {
    std::ostringstream os;
    os << "fundamental_forms: degenerate surface at (" << jet.u << ", "
       << jet.v << "), det g = " << f.detg;
    throw DegenerateSurfaceError(os.str());
  }
  const Vec3 cross = jet.r_u.cross(jet.r_v);
  const Vec3 n = cross / cross.norm();
  f.l = jet.r_uu.dot(n);
  f.m = jet.r_uv.dot(n);
  f.n_c = jet.r_vv.dot(n);
  f.K = (f.l * f.n_c - f.m * f.m) / f.detg;
  f.H = (f.g11 * f.n_c - 2.0 * f.g12 * f.m + f.g22 * f.l) / (2.0 * f.detg);
  return f;
}

NormalFrame normal_frame(const SurfaceJet& jet) {
  const Vec3 c = jet.r_u.cross(jet.r_v);
  const double cn = c.norm();
  if (!(cn > 0.0)) {
    std::ostringstream os;
    os << "normal_frame: |r_u x r_v| = 0 at (" << jet.u << ", " << jet.v << ")";
    throw DegenerateSurfaceError(os.str());
  }
  NormalFrame frame;
  frame.n = c / cn;
  // Quotient rule for n = c/|c|: n_i = c_i/|c| - c (c . c_i)/|c|^3.
  const Vec3 c_u = jet.r_uu.cross(jet.r_v) + jet.r_u.cross(jet.r_uv);
  const Vec3 c_v = jet.r_uv.cross(jet.r_v) + jet.r_u.cross(jet.r_vv);
  frame.n_u = c_u / cn - c * (c.dot(c_u)) / (cn * cn * cn);
  frame.n_v = c_v / cn - c * (c.dot(c_v)) / (cn * cn * cn);
  return frame;
}

NormalFrame normal_frame(const SurfacePatch& patch, double u, double v) {
  return normal_frame(surface_jet(patch, u, v));
}

VariationMetric metric_at(const SurfaceJet& jet, const NormalFrame& frame,
                          const FundamentalForms& forms, double lambda) {
  VariationMetric mg;
  mg.lambda = lambda;
  const double nu2 = frame.n_u.squaredNorm();
  const double nv2 = frame.n_v.squaredNorm();
  const double nuv = frame.n_u.dot(frame.n_v);

  const double G11 = forms.g11 - 2.0 * forms.l * lambda + nu2 * lambda * lambda;
  const double G12 = forms.g12 - 2.0 * forms.m * lambda + nuv * lambda * lambda;
  const double G22 = forms.g22 - 2.0 * forms.n_c * lambda + nv2 * lambda * lambda;

  mg.G.setZero();
  mg.G(0, 0) = G11;
  mg.G(0, 1) = mg.G(1, 0) = G12;
  mg.G(1, 1) = G22;
  mg.G(2, 2) = 1.0;

  const double det2 = G11 * G22 - G12 * G12;
  mg.detG = det2;
  if (!(det2 > 0.0) || !(G11 > 0.0)) {
    std::ostringstream os;
    os << "metric_at: degenerate variation metric at (u=" << jet.u
       << ", v=" << jet.v << ", lambda=" << lambda << "), det G = " << det2;
    throw MetricDegeneracyError(os.str());
  }
  mg.Ginv.setZero();
  mg.Ginv(0, 0) = G22 / det2;
  mg.Ginv(0, 1) = mg.Ginv(1, 0) = -G12 / det2;
  mg.Ginv(1, 1) = G11 / det2;
  mg.Ginv(2, 2) = 1.0;
  return mg;
}

QuarticCoeffs detG_quartic(const FundamentalForms& forms, const NormalFrame& frame) {
  const double nu2 = frame.n_u.squaredNorm();
  const double nv2 = frame.n_v.squaredNorm();
  const double nuv = frame.n_u.dot(frame.n_v);
  QuarticCoeffs q;
  q.c[0] = forms.detg;
  q.c[1] = -4.0 * forms.H * forms.detg;
  q.c[2] = 4.0 * forms.K * forms.detg + forms.g11 * nv2 - 2.0 * forms.g12 * nuv +
           forms.g22 * nu2;
  q.c[3] = -2.0 * (forms.l * nv2 - 2.0 * forms.m * nuv + forms.n_c * nu2);
  q.c[4] = nu2 * nv2 - nuv * nuv;
  return q;
}

double grad_norm_G(const Vec3& gradW, const VariationMetric& metric) {
  const double s = gradW.dot(metric.Ginv * gradW);
  return s > 0.0 ? std::sqrt(s) : 0.0;
}

SurfaceJet surface_jet_fd(const SurfacePatch& patch, double u, double v,
                          double step) {
  auto r = patch.r;
  SurfaceJet jet;
  jet.u = u;
  jet.v = v;
  jet.point = r(u, v);
  jet.r_u = (r(u + step, v) - r(u - step, v)) / (2.0 * step);
  jet.r_v = (r(u, v + step) - r(u, v - step)) / (2.0 * step);
  jet.r_uu = (r(u + step, v) - 2.0 * jet.point + r(u - step, v)) / (step * step);
  jet.r_vv = (r(u, v + step) - 2.0 * jet.point + r(u, v - step)) / (step * step);
  jet.r_uv = (r(u + step, v + step) - r(u + step, v - step) - r(u - step, v + step) +
              r(u - step, v - step)) /
             (4.0 * step * step);
  return jet;
}

}  // namespace fracflow
