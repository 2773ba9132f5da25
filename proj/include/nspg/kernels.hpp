#pragma once

#include "nspg/common.hpp"

/// Singular kernel of the double Riesz transform and the ball cutoffs used by
/// the local pressure expansion.
///
/// Index convention: every API here takes 0-based component indices
/// (0, 1, 2) which correspond to the mathematical indices 1, 2, 3.
namespace nspg {

/// K_ij(y) = (-delta_ij |y|^2 + 3 y_i y_j) / (4 pi |y|^5). Throws at y = 0.
double kernel_K(int i, int j, const Vec3& y);
Mat3 kernel_K(const Vec3& y);

/// Derivative d/dy_k K_ij(y); entry (i, j) of the returned matrix for fixed k.
Mat3 kernel_dK(int k, const Vec3& y);

/// Smooth monotone step on [0, 1]: 0 for s <= 0, 1 for s >= 1, built from exp(-1/s).
double smooth_step(double s);
double smooth_step_derivative(double s);

/// Radial cutoff theta_R(x) = Theta(x / R): 1 on |x| <= 2R, 0 on |x| >= 4R.
struct CutoffSpec {
  double R = 1.0;

  double radial(double r) const;
  double radial_derivative(double r) const;
  double operator()(const Vec3& x) const { return radial(x.norm()); }

  /// sup |grad theta_R| <= grad_constant() / R.
  static double grad_constant();
  double grad_bound() const { return grad_constant() / R; }
};

/// Ball B_R(x0); the cutoff is centred at x0 with the same R.
struct BallSpec {
  Vec3 x0 = Vec3::Zero();
  double R = 1.0;

  BallSpec() = default;
  BallSpec(const Vec3& c, double r);
  CutoffSpec cutoff() const { return CutoffSpec{R}; }
  bool contains(const Vec3& x) const { return (x - x0).norm() < R; }
};

/// K_ij(x) (1 - theta_R(x)); zero on |x| <= 2R, equal to K_ij for |x| >= 4R.
double kernel_K_truncated(int i, int j, const Vec3& x, const BallSpec& ball);

struct SphereAverage {
  double value = 0.0;
  double residual = 0.0;   // |value(n) - value(2n)|
  bool flagged = false;    // residual above 1e-12 or order too low to integrate K exactly
};

/// Mean of K_ij over the sphere |y| = r with the product rule of order n_quad.
SphereAverage sphere_average_K(int i, int j, double r, int n_quad);

}  // namespace nspg
