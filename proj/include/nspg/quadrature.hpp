#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nspg/common.hpp"

namespace nspg {

struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
  std::size_t size() const { return x.size(); }
};

/// n-point Gauss-Legendre rule mapped to [a, b].
Rule1D gauss_legendre(int n, double a, double b);

/// Composite Gauss-Legendre: every interval between consecutive breakpoints is
/// split into pieces no wider than max_width, each with n nodes.
Rule1D composite_gauss(std::span<const double> breaks, int n, double max_width);

/// Product rule on the unit sphere: Gauss-Legendre in cos(theta) with n_theta
/// nodes, trapezoid in the azimuth with n_phi nodes. Weights sum to 4*pi.
struct SphereRule {
  std::vector<Vec3> dir;
  std::vector<double> w;
  std::size_t size() const { return dir.size(); }
};
SphereRule sphere_rule(int n_theta, int n_phi);
/// Same rule, built once per order pair and shared.
const SphereRule& cached_sphere_rule(int n_theta, int n_phi);

/// Angular order for a degree-L integrand: the GL rule in cos(theta) is exact
/// up to 2n-1, the trapezoid up to n_phi-1 in the azimuth.
struct AngularOrder {
  int n_theta;
  int n_phi;
};
AngularOrder angular_order_for_degree(double degree);

/// Adaptive Gauss-Kronrod on [a, b]. Throws if the error estimate exceeds
/// max(tol_abs, 1e3 * tol_abs * |result|) after refinement.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol_abs = 1e-13);

/// Sum of w * f(y) over the spherical product rule centred at c.
template <class F>
void for_each_spherical(const Vec3& c, const Rule1D& radial, const SphereRule& ang, F&& f) {
  for (std::size_t ir = 0; ir < radial.size(); ++ir) {
    const double r = radial.x[ir];
    const double wr = radial.w[ir] * r * r;
    for (std::size_t ia = 0; ia < ang.size(); ++ia) {
      f(Vec3(c + r * ang.dir[ia]), wr * ang.w[ia], r, ir, ia);
    }
  }
}

}  // namespace nspg
