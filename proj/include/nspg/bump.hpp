#pragma once

#include "nspg/common.hpp"

namespace nspg {

/// Radial test bump beta(x) = A exp(-s / (1 - |x - c|^2 / rho^2)) on B_rho(c),
/// normalised so that its integral is 1. The default is the standard mollifier
/// on the unit ball.
class TestBump {
 public:
  TestBump() : TestBump(Vec3::Zero(), 1.0, 1.0) {}
  TestBump(const Vec3& center, double radius, double sharpness = 1.0);

  const Vec3& center() const { return c_; }
  double radius() const { return rho_; }
  double sharpness() const { return s_; }
  double amplitude() const { return A_; }

  double value(const Vec3& x) const { return profile((x - c_).norm()); }
  Vec3 gradient(const Vec3& x) const;
  double laplacian(const Vec3& x) const;

  /// Radial profile and derivative quantities at distance r from the centre.
  double profile(double r) const;
  /// beta'(r) / r.
  double dprofile_over_r(double r) const;
  double laplacian_radial(double r) const;

  /// Coefficients of R_i R_j d_k beta at relative position y, |y| = r:
  ///   b(r) (delta_ij y_k + delta_ik y_j + delta_jk y_i) + c(r) y_i y_j y_k.
  /// Outside the support this is exactly d_k K_ij(y).
  double potential_b(double r) const;
  double potential_c(double r) const;
  /// Entry (i, j) of R_i R_j d_k beta at relative position y.
  Mat3 riesz_gradient(int k, const Vec3& y) const;

  /// beta_R(x) = R^-3 beta(x / R): centre R c, radius R rho.
  TestBump scaled(double R) const;

 private:
  double g(double q) const { return -s_ / (1.0 - q); }
  double gq(double q) const { return -s_ / ((1.0 - q) * (1.0 - q)); }
  double gqq(double q) const { return -2.0 * s_ / ((1.0 - q) * (1.0 - q) * (1.0 - q)); }

  Vec3 c_;
  double rho_;
  double s_;
  double A_;
};

}  // namespace nspg
