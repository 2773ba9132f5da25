#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "nspg/quadrature.hpp"
#include "resolution.hpp"

namespace nspg::detail {

/// Spherical product nodes on B_R(c), clipped to the field support. The
/// angular degree resolves quadratic expressions in the field.
struct BallNodes {
  std::vector<Vec3> x;
  std::vector<double> w;
  std::vector<double> r;  // distance to the centre
};

inline BallNodes ball_nodes(const FieldTraits& tr, const Vec3& c, double R, double scale) {
  BallNodes out;
  const auto [slo, shi] = support_range(tr, c);
  const double lo = std::min(slo, R), hi = std::min(shi, R);
  if (!(hi > lo)) return out;
  const double width = std::min(R / 4.0, field_width(tr));
  const int pieces = std::max(1, static_cast<int>(std::ceil((hi - lo) / width - 1e-12)));
  const double step = (hi - lo) / pieces;
  const int nr = std::max(4, static_cast<int>(std::ceil(16.0 * scale)));
  for (int q = 0; q < pieces; ++q) {
    const double a = lo + q * step, b = a + step;
    const Rule1D rule = gauss_legendre(nr, a, b);
    const AngularOrder ao = angular_order_for_degree(scale * 2.0 * field_degree(tr, b) + 8.0);
    const SphereRule& sr = cached_sphere_rule(ao.n_theta, ao.n_phi);
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double wr = rule.w[i] * rule.x[i] * rule.x[i];
      for (std::size_t k = 0; k < sr.size(); ++k) {
        out.x.push_back(c + rule.x[i] * sr.dir[k]);
        out.w.push_back(wr * sr.w[k]);
        out.r.push_back(rule.x[i]);
      }
    }
  }
  return out;
}

}  // namespace nspg::detail
