#include "fracflow/flowlaw.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fracflow {

double f_beta(double alpha, double beta, double zeta) {
  if (!(alpha > 0.0) || beta < 0.0 || zeta < 0.0) {
    throw std::invalid_argument("f_beta: requires alpha > 0, beta >= 0, zeta >= 0");
  }
  return 2.0 / (alpha + std::sqrt(alpha * alpha + 4.0 * beta * zeta));
}

Vec3 velocity(const Vec3& gradW, const VariationMetric& metric,
              const FluidParams& params) {
  const double zeta = grad_norm_G(gradW, metric);
  const double f = f_beta(params.alpha, params.beta, zeta);
  return -f * (metric.Ginv * gradW);
}

double monotonicity_gap(const Vec3& eta1, const Vec3& eta2,
                        const FluidParams& params) {
  const double n1 = eta1.norm();
  const double n2 = eta2.norm();
  const double f1 = f_beta(params.alpha, params.beta, n1);
  const double f2 = f_beta(params.alpha, params.beta, n2);
  const double fmax = f_beta(params.alpha, params.beta, std::max(n1, n2));
  const Vec3 d = eta1 - eta2;
  return (f1 * eta1 - f2 * eta2).dot(d) - 0.5 * fmax * d.squaredNorm();
}

}  // namespace fracflow
