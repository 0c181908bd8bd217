#pragma once

#include "fracflow/geometry.hpp"

namespace fracflow {

/// Constitutive and source constants shared by every solver. All quantities
/// are dimensionless (relative units).
struct FluidParams {
  double alpha = 1.0;      // mu/k inside the fracture
  double beta = 0.0;       // Forchheimer coefficient, >= 0
  double gamma = 1.0;      // compressibility constant
  double Q = 1.0;          // production rate
  double omega_vol = 1.0;  // |Omega|, total domain volume
  double k_p = 0.01;       // porous-media permeability
  double k_f = 1.0;        // fracture permeability
};

/// Darcy-Forchheimer mobility: the positive root of
/// beta*zeta*f^2 + alpha*f - 1 = 0, in rationalized form
/// f = 2/(alpha + sqrt(alpha^2 + 4 beta zeta)).
double f_beta(double alpha, double beta, double zeta);

/// v = -f_beta(|grad W|_G) Ginv gradW (contravariant components).
Vec3 velocity(const Vec3& gradW, const VariationMetric& metric,
              const FluidParams& params);

/// Monotonicity gap of the Forchheimer flux map,
///   (f(|e1|)e1 - f(|e2|)e2).(e1-e2) - 1/2 f(max(|e1|,|e2|)) |e1-e2|^2.
/// Nonnegative (up to roundoff) for all inputs.
double monotonicity_gap(const Vec3& eta1, const Vec3& eta2,
                        const FluidParams& params);

}  // namespace fracflow
