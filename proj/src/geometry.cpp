#include "nspg/geometry.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <functional>
#include <vector>

namespace nspg {

namespace {

double chord(double r, double s) { return std::sqrt(std::max(0.0, r * r - s * s)); }

/// Adds s where f changes sign on [a, b] (scan then bisect).
void add_roots(const std::function<double(double)>& f, double a, double b, std::vector<double>& out) {
  constexpr int kScan = 400;
  double x0 = a, f0 = f(a);
  for (int i = 1; i <= kScan; ++i) {
    const double x1 = a + (b - a) * i / kScan;
    const double f1 = f(x1);
    if ((f0 < 0.0) != (f1 < 0.0)) {
      double lo = x0, hi = x1, flo = f0;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      out.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    f0 = f1;
  }
}

/// Integrates a slice-area function over [a, b] with the given breakpoints.
double integrate_slices(const std::function<double(double)>& area, std::vector<double> breaks, double a,
                        double b) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::vector<double> pts;
  for (double x : breaks)
    if (x >= a && x <= b) pts.push_back(x);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  boost::math::quadrature::tanh_sinh<double> ts;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] - pts[i] <= 0.0) continue;
    total += ts.integrate(area, pts[i], pts[i + 1], 1e-13);
  }
  return total;
}

}  // namespace

double disk_overlap_area(double r1, double r2, double d) {
  if (r1 <= 0.0 || r2 <= 0.0) return 0.0;
  if (d >= r1 + r2) return 0.0;
  if (d <= std::abs(r1 - r2)) {
    const double m = std::min(r1, r2);
    return kPi * m * m;
  }
  const double c1 = std::clamp((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1), -1.0, 1.0);
  const double c2 = std::clamp((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2), -1.0, 1.0);
  const double k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
  return r1 * r1 * std::acos(c1) + r2 * r2 * std::acos(c2) - 0.5 * std::sqrt(std::max(0.0, k));
}

double ball_cylinder_volume(const Vec3& x0, double R, double rc) {
  if (!(R > 0.0)) throw Error("ball_cylinder_volume: radius must be positive");
  const double d = std::hypot(x0[1], x0[2]);
  auto area = [&](double s) { return disk_overlap_area(rc, chord(R, s), d); };
  std::vector<double> breaks;
  add_roots([&](double s) { return chord(R, s) + rc - d; }, -R, R, breaks);
  add_roots([&](double s) { return chord(R, s) - rc - d; }, -R, R, breaks);
  add_roots([&](double s) { return rc - chord(R, s) - d; }, -R, R, breaks);
  return integrate_slices(area, breaks, -R, R);
}

double ball_dyadic_integral_sq(const Vec3& x0, double R, int k_max) {
  if (!(R > 0.0)) throw Error("ball_dyadic_integral_sq: radius must be positive");
  if (k_max < 1 || k_max > 60) throw Error("ball_dyadic_integral_sq: k_max out of range");
  const double d = std::hypot(x0[1], x0[2]);
  const double a = x0[0] - R, b = x0[0] + R;
  std::vector<int> ks;
  for (int k = 1; k <= k_max; ++k) {
    const double c = std::ldexp(1.0, k);
    if (c + k > a && c - k < b) ks.push_back(k);
  }
  if (ks.empty()) return 0.0;
  auto area = [&](double s) {
    const double rb = chord(R, s - x0[0]);
    std::vector<double> radii;
    for (int k : ks) {
      const double r = chord(k, s - std::ldexp(1.0, k));
      if (r > 0.0) radii.push_back(r);
    }
    std::sort(radii.begin(), radii.end());
    const std::size_t m = radii.size();
    double total = 0.0, prev = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double cur = disk_overlap_area(radii[j], rb, d);
      const double count = static_cast<double>(m - j);
      total += count * count * (cur - prev);
      prev = cur;
    }
    return total;
  };
  std::vector<double> breaks;
  for (int k : ks) {
    const double c = std::ldexp(1.0, k);
    breaks.push_back(c - k);
    breaks.push_back(c + k);
    const double lo = std::max(a, c - k), hi = std::min(b, c + k);
    if (hi <= lo) continue;
    auto ak = [&, c, k](double s) { return chord(k, s - c); };
    auto ab = [&](double s) { return chord(R, s - x0[0]); };
    add_roots([&](double s) { return ak(s) + ab(s) - d; }, lo, hi, breaks);
    add_roots([&](double s) { return ak(s) - ab(s) - d; }, lo, hi, breaks);
    add_roots([&](double s) { return ab(s) - ak(s) - d; }, lo, hi, breaks);
    for (int k2 : ks) {
      if (k2 <= k) continue;
      const double c2 = std::ldexp(1.0, k2);
      add_roots([&, c2, k2](double s) { return ak(s) - chord(k2, s - c2); }, lo, hi, breaks);
    }
  }
  return integrate_slices(area, breaks, a, b);
}

}  // namespace nspg
