#include "nspg/kernels.hpp"

#include <cmath>

#include "nspg/quadrature.hpp"

namespace nspg {

namespace {

void check_index(int i) {
  if (i < 0 || i > 2) throw Error("component index out of range (expected 0..2)");
}

double expm1_inv(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

}  // namespace

double kernel_K(int i, int j, const Vec3& y) {
  check_index(i);
  check_index(j);
  const double r2 = y.squaredNorm();
  if (r2 == 0.0) throw Error("kernel_K: singular at y = 0");
  const double r = std::sqrt(r2);
  const double num = (i == j ? -r2 : 0.0) + 3.0 * (y[i] * y[j]);
  return num / (4.0 * kPi * r2 * r2 * r);
}

Mat3 kernel_K(const Vec3& y) {
  const double r2 = y.squaredNorm();
  if (r2 == 0.0) throw Error("kernel_K: singular at y = 0");
  const double r = std::sqrt(r2);
  const double s = 1.0 / (4.0 * kPi * r2 * r2 * r);
  Mat3 k;
  for (int i = 0; i < 3; ++i) {
    k(i, i) = (3.0 * (y[i] * y[i]) - r2) * s;
    for (int j = i + 1; j < 3; ++j) k(i, j) = k(j, i) = 3.0 * (y[i] * y[j]) * s;
  }
  return k;
}

Mat3 kernel_dK(int k, const Vec3& y) {
  check_index(k);
  const double r2 = y.squaredNorm();
  if (r2 == 0.0) throw Error("kernel_dK: singular at y = 0");
  const double r = std::sqrt(r2);
  const double a = 3.0 / (4.0 * kPi * r2 * r2 * r);
  const double c = -15.0 / (4.0 * kPi * r2 * r2 * r2 * r);
  Mat3 m = (c * y[k]) * (y * y.transpose());
  m.diagonal().array() += a * y[k];
  m.row(k) += a * y.transpose();
  m.col(k) += a * y;
  return m;
}

double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = expm1_inv(s), b = expm1_inv(1.0 - s);
  return a / (a + b);
}

double smooth_step_derivative(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double a = expm1_inv(s), b = expm1_inv(1.0 - s);
  const double da = a / (s * s), db = -b / ((1.0 - s) * (1.0 - s));
  return (da * b - a * db) / ((a + b) * (a + b));
}

double CutoffSpec::radial(double r) const { return 1.0 - smooth_step((r / R - 2.0) / 2.0); }

double CutoffSpec::radial_derivative(double r) const {
  return -smooth_step_derivative((r / R - 2.0) / 2.0) / (2.0 * R);
}

double CutoffSpec::grad_constant() {
  // sup of the step derivative over [0, 1], halved by the transition width.
  static const double c = [] {
    double m = 0.0;
    for (int i = 1; i < 20000; ++i) m = std::max(m, smooth_step_derivative(i / 20000.0));
    return m / 2.0 * (1.0 + 1e-6);
  }();
  return c;
}

BallSpec::BallSpec(const Vec3& c, double r) : x0(c), R(r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw Error("BallSpec: radius must be positive");
  if (!c.allFinite()) throw Error("BallSpec: centre must be finite");
}

double kernel_K_truncated(int i, int j, const Vec3& x, const BallSpec& ball) {
  const double w = 1.0 - ball.cutoff()(x);
  if (w == 0.0) return 0.0;
  return w * kernel_K(i, j, x);
}

SphereAverage sphere_average_K(int i, int j, double r, int n_quad) {
  check_index(i);
  check_index(j);
  if (!(r > 0.0)) throw Error("sphere_average_K: radius must be positive");
  auto mean = [&](int n) {
    const SphereRule s = sphere_rule(std::max(n, 1), std::max(2 * n, 1));
    double acc = 0.0;
    for (std::size_t a = 0; a < s.size(); ++a) acc += s.w[a] * kernel_K(i, j, r * s.dir[a]);
    return acc / (4.0 * kPi);
  };
  SphereAverage out;
  out.value = mean(n_quad);
  out.residual = std::abs(out.value - mean(2 * std::max(n_quad, 1)));
  // K restricted to a sphere is a degree-2 polynomial in the direction.
  out.flagged = n_quad < 2 || out.residual > 1e-12 / (r * r * r);
  return out;
}

}  // namespace nspg
