#include "nspg/bump.hpp"

#include <cmath>

#include "nspg/quadrature.hpp"

namespace nspg {

namespace {
constexpr int kPotentialNodes = 128;
}

TestBump::TestBump(const Vec3& center, double radius, double sharpness)
    : c_(center), rho_(radius), s_(sharpness), A_(0.0) {
  if (!(radius > 0.0) || !(sharpness > 0.0)) throw Error("TestBump: radius and sharpness must be positive");
  if (!center.allFinite()) throw Error("TestBump: centre must be finite");
  const double J = integrate_adaptive(
      [this](double t) { return t >= 1.0 ? 0.0 : std::exp(g(t * t)) * t * t; }, 0.0, 1.0, 1e-14);
  A_ = 1.0 / (4.0 * kPi * rho_ * rho_ * rho_ * J);
}

double TestBump::profile(double r) const {
  const double q = r * r / (rho_ * rho_);
  return q < 1.0 ? A_ * std::exp(g(q)) : 0.0;
}

double TestBump::dprofile_over_r(double r) const {
  const double q = r * r / (rho_ * rho_);
  return q < 1.0 ? A_ * std::exp(g(q)) * gq(q) * 2.0 / (rho_ * rho_) : 0.0;
}

double TestBump::laplacian_radial(double r) const {
  const double q = r * r / (rho_ * rho_);
  if (q >= 1.0) return 0.0;
  const double r2 = rho_ * rho_;
  const double e = A_ * std::exp(g(q));
  const double gqv = gq(q);
  return e * (4.0 * r * r * (gqv * gqv + gqq(q)) / (r2 * r2) + 6.0 * gqv / r2);
}

Vec3 TestBump::gradient(const Vec3& x) const {
  const Vec3 y = x - c_;
  return dprofile_over_r(y.norm()) * y;
}

double TestBump::laplacian(const Vec3& x) const { return laplacian_radial((x - c_).norm()); }

double TestBump::potential_b(double r) const {
  if (r >= rho_) return 3.0 / (4.0 * kPi * std::pow(r, 5));
  static const Rule1D gl = gauss_legendre(kPotentialNodes, 0.0, 1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < gl.size(); ++i) {
    const double t = gl.x[i];
    const double q = (r * t / rho_) * (r * t / rho_);
    acc += gl.w[i] * std::exp(g(q)) * gq(q) * std::pow(t, 4);
  }
  return -2.0 * A_ / (rho_ * rho_) * acc;
}

double TestBump::potential_c(double r) const {
  if (r >= rho_) return -15.0 / (4.0 * kPi * std::pow(r, 7));
  static const Rule1D gl = gauss_legendre(kPotentialNodes, 0.0, 1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < gl.size(); ++i) {
    const double t = gl.x[i];
    const double q = (r * t / rho_) * (r * t / rho_);
    const double gqv = gq(q);
    acc += gl.w[i] * std::exp(g(q)) * (gqv * gqv + gqq(q)) * std::pow(t, 6);
  }
  return -4.0 * A_ / std::pow(rho_, 4) * acc;
}

Mat3 TestBump::riesz_gradient(int k, const Vec3& y) const {
  const double r = y.norm();
  const double b = potential_b(r), c = potential_c(r);
  Mat3 m = (c * y[k]) * (y * y.transpose());
  m.diagonal().array() += b * y[k];
  m.row(k) += b * y.transpose();
  m.col(k) += b * y;
  return m;
}

TestBump TestBump::scaled(double R) const {
  if (!(R > 0.0)) throw Error("TestBump::scaled: scale must be positive");
  return TestBump(R * c_, R * rho_, s_);
}

}  // namespace nspg
