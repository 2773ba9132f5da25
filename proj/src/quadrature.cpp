#include "nspg/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace nspg {

namespace {

struct TableDeleter {
  void operator()(gsl_integration_glfixed_table* t) const { gsl_integration_glfixed_table_free(t); }
};

const gsl_integration_glfixed_table* gl_table(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<gsl_integration_glfixed_table, TableDeleter>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot.reset(gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n)));
  return slot.get();
}

}  // namespace

Rule1D gauss_legendre(int n, double a, double b) {
  if (n < 1) throw Error("gauss_legendre: need at least one node");
  const auto* t = gl_table(n);
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    gsl_integration_glfixed_point(a, b, static_cast<std::size_t>(i), &r.x[i], &r.w[i], t);
  }
  return r;
}

Rule1D composite_gauss(std::span<const double> breaks, int n, double max_width) {
  Rule1D out;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k], b = breaks[k + 1];
    if (!(b > a)) continue;
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / max_width - 1e-12)));
    const double step = (b - a) / pieces;
    for (int p = 0; p < pieces; ++p) {
      const Rule1D g = gauss_legendre(n, a + p * step, a + (p + 1) * step);
      out.x.insert(out.x.end(), g.x.begin(), g.x.end());
      out.w.insert(out.w.end(), g.w.begin(), g.w.end());
    }
  }
  return out;
}

SphereRule sphere_rule(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1) throw Error("sphere_rule: orders must be positive");
  const Rule1D mu = gauss_legendre(n_theta, -1.0, 1.0);
  SphereRule s;
  s.dir.reserve(static_cast<std::size_t>(n_theta) * n_phi);
  s.w.reserve(static_cast<std::size_t>(n_theta) * n_phi);
  const double dphi = 2.0 * kPi / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    const double ct = mu.x[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < n_phi; ++j) {
      const double ph = (j + 0.5) * dphi;
      s.dir.emplace_back(st * std::cos(ph), st * std::sin(ph), ct);
      s.w.push_back(mu.w[i] * dphi);
    }
  }
  return s;
}

const SphereRule& cached_sphere_rule(int n_theta, int n_phi) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<SphereRule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{n_theta, n_phi}];
  if (!slot) slot = std::make_unique<SphereRule>(sphere_rule(n_theta, n_phi));
  return *slot;
}

AngularOrder angular_order_for_degree(double degree) {
  const int nt = std::max(2, static_cast<int>(std::ceil((degree + 1.0) / 2.0)) + 1);
  int np = std::max(4, static_cast<int>(std::ceil(degree)) + 2);
  np += np % 2;
  return {nt, np};
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol_abs) {
  if (b <= a) return 0.0;
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, 15, 1e-12, &err);
  if (!(err <= std::max(tol_abs, 1e3 * tol_abs * std::abs(v)))) {
    throw Error("integrate_adaptive: error estimate " + std::to_string(err) + " above tolerance");
  }
  return v;
}

}  // namespace nspg
