#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "nspg/fields.hpp"

namespace nspg::detail {

/// Angular degree needed to resolve a field with these traits on a sphere of radius r.
inline double field_degree(const FieldTraits& tr, double r) {
  double L = tr.wavenumber * r + 3.0 * std::cbrt(tr.wavenumber * r);
  if (tr.wavenumber == 0.0 || tr.decay != DecayClass::BoundedPeriodic) L += 3.0 * r / tr.length_scale;
  return L;
}

/// Largest 16-node radial panel that resolves the field.
inline double field_width(const FieldTraits& tr) {
  double w = std::numeric_limits<double>::infinity();
  if (tr.wavenumber > 0.0) w = std::min(w, 4.0 * kPi / tr.wavenumber);
  if (tr.wavenumber == 0.0 || tr.decay != DecayClass::BoundedPeriodic) w = std::min(w, 1.5 * tr.length_scale);
  return w;
}

/// Radii [lo, hi] around c outside of which the field vanishes.
inline std::pair<double, double> support_range(const FieldTraits& tr, const Vec3& c) {
  if (!tr.support) return {0.0, std::numeric_limits<double>::infinity()};
  const double d = (tr.support->center - c).norm();
  return {std::max(0.0, d - tr.support->radius), d + tr.support->radius};
}

}  // namespace nspg::detail
