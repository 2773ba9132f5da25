#pragma once

#include "nspg/common.hpp"

/// Exact (to quadrature round-off) volumes used by the indicator fields.
/// Every region is sliced perpendicular to the x1 axis; each slice is a union
/// of discs whose overlap areas are known in closed form.
namespace nspg {

/// Area of the intersection of two discs with radii r1, r2 and centre distance d.
double disk_overlap_area(double r1, double r2, double d);

/// |B_R(x0) intersected with {x2^2 + x3^2 < rc^2}|.
double ball_cylinder_volume(const Vec3& x0, double R, double rc = 1.0);

/// Integral over B_R(x0) of (sum_{k=1..k_max} 1_{B_k((2^k,0,0))})^2.
double ball_dyadic_integral_sq(const Vec3& x0, double R, int k_max);

}  // namespace nspg
