#include "doctest.h"

#include <cmath>

#include "nspg/drift.hpp"
#include "nspg/quadrature.hpp"

using namespace nspg;

namespace {

Vec3 sin_phi(double t) { return Vec3(std::sin(t), 0.5 * std::sin(2 * t), 0.0); }
Vec3 sin_Phi(double t) { return Vec3(1.0 - std::cos(t), 0.25 * (1.0 - std::cos(2 * t)), 0.0); }

// <p(t), d_k beta> by spherical product quadrature around the bump.
Vec3 direct_pairing(const ScalarField& p, const TestBump& beta, double t) {
  static const Rule1D rr = composite_gauss(std::vector<double>{0.0, 0.9, 0.99, 1.0}, 32, 1.0);
  static const SphereRule sr = sphere_rule(20, 40);
  Rule1D scaled = rr;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    scaled.x[i] *= beta.radius();
    scaled.w[i] *= beta.radius();
  }
  Vec3 acc = Vec3::Zero();
  for_each_spherical(beta.center(), scaled, sr, [&](const Vec3& y, double w, double, std::size_t, std::size_t) {
    acc += w * p(y, t) * beta.gradient(y);
  });
  return acc;
}

}  // namespace

TEST_CASE("cumulative trapezoid") {
  const TimeGrid g(0.0, 2.0, 9);
  const std::vector<Vec3> c(9, Vec3(1.0, -2.0, 0.5));
  const auto Pc = integrate_Phi(g, c);
  CHECK(Pc[0].norm() == 0.0);
  for (int i = 0; i < 9; ++i) CHECK((Pc[i] - g.at(i) * Vec3(1.0, -2.0, 0.5)).norm() < 1e-14);

  auto max_err = [](int n) {
    const TimeGrid g2(0.0, 1.0, n);
    std::vector<Vec3> phi;
    for (int i = 0; i < n; ++i) phi.push_back(sin_phi(g2.at(i)));
    const auto P = integrate_Phi(g2, phi);
    double e = 0.0;
    for (int i = 0; i < n; ++i) e = std::max(e, (P[i] - sin_Phi(g2.at(i))).norm());
    return e;
  };
  const double e1 = max_err(17), e2 = max_err(33);
  // Trapezoid error <= T h^2 max|phi''| / 12 with max|phi''| <= 2.
  CHECK(e1 <= (1.0 / 16) * (1.0 / 16) * 2.0 / 12.0);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));

  const std::vector<double> t = {0.0, 0.1, 0.4, 1.0};
  const std::vector<Vec3> lin = {Vec3(0, 0, 0), Vec3(0.1, 0, 0), Vec3(0.4, 0, 0), Vec3(1.0, 0, 0)};
  const auto Pl = integrate_Phi(t, lin);
  CHECK(Pl[3][0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(integrate_Phi(std::vector<double>{0.0, 1.0}, std::vector<Vec3>(3)), Error);
}

TEST_CASE("drift record interpolation") {
  DriftRecord r;
  r.times = TimeGrid(0.0, 1.0, 3);
  r.phi = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 0, 0)};
  r.Phi = integrate_Phi(r.times, r.phi);
  CHECK(r.phi_at(0.25)[0] == doctest::Approx(0.5));
  CHECK(r.Phi_at(0.25)[0] == doctest::Approx(0.0625));
  CHECK(r.Phi_at(1.0)[0] == doctest::Approx(0.5));
  CHECK(r.l1_norm() == doctest::Approx(0.5));
  CHECK(r.sup_phi() == doctest::Approx(1.0));
  CHECK(r.sup_Phi() == doctest::Approx(0.5));
  CHECK_THROWS_AS(r.phi_at(1.5), Error);
}

TEST_CASE("test bump is a normalised mollifier") {
  for (const TestBump& b : {TestBump(), TestBump(Vec3(1, 2, 3), 0.5, 2.0)}) {
    CHECK(direct_pairing(ScalarField([](const Vec3&, double) { return 1.0; }, FieldTraits{}), b, 0.0).norm() < 1e-12);
    const Rule1D rr = composite_gauss(std::vector<double>{0.0, 0.9 * b.radius(), 0.99 * b.radius(), b.radius()},
                                      32, b.radius());
    double mass = 0.0;
    for_each_spherical(b.center(), rr, sphere_rule(4, 8),
                       [&](const Vec3& y, double w, double, std::size_t, std::size_t) { mass += w * b.value(y); });
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  }
  const TestBump b(Vec3(0.2, 0, 0), 1.0);
  const TestBump bR = b.scaled(4.0);
  CHECK(bR.radius() == 4.0);
  CHECK((bR.center() - Vec3(0.8, 0, 0)).norm() < 1e-15);
  const Vec3 x(0.5, 0.3, -0.2);
  CHECK(bR.value(4.0 * x) == doctest::Approx(b.value(x) / 64.0).epsilon(1e-14));
}

TEST_CASE("zero velocity has zero drift") {
  const VectorField zero = make_constant_field(Vec3::Zero());
  const DriftRecord r = extract_drift(zero, zero, TestBump(), TimeGrid(0.0, 1.0, 5));
  for (const Vec3& p : r.phi) CHECK(p.norm() == 0.0);
  CHECK(r.sup_Phi() == 0.0);
}

TEST_CASE("constant velocity has zero drift") {
  const VectorField c = make_constant_field(Vec3(1.0, -0.5, 2.0));
  const DriftRecord r = extract_drift(c, c, TestBump(), TimeGrid(0.0, 1.0, 5));
  CHECK(r.sup_phi() < 1e-9);
}

TEST_CASE("taylor-green carries no drift") {
  const FieldPair tg = make_taylor_green(1.0);
  const TestBump beta(Vec3(0.3, 0.1, -0.2), 1.0);
  // Off-centre bump: nothing cancels by symmetry, the trapezoid error is O(h^2).
  const DriftRecord r9 = extract_drift(tg.u, tg.u, beta, TimeGrid(0.0, 1.0, 9));
  const DriftRecord r17 = extract_drift(tg.u, tg.u, beta, TimeGrid(0.0, 1.0, 17));
  CHECK(r17.pressure_converged);
  CHECK(r17.sup_phi() < 1e-3);
  CHECK(r9.sup_phi() / r17.sup_phi() == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("parasitic drift is recovered and removed") {
  const FieldPair tg = make_taylor_green(1.0);
  const DriftSpec d = make_sinusoidal_drift(Vec3(0.3, -0.2, 0.1), 1.0);
  const FieldPair par = inject_drift(tg, d, 1.0);
  const TimeGrid g(0.0, 1.0, 33);
  const DriftRecord r = extract_drift(par.u, par.u, TestBump(), g);
  double err = 0.0;
  for (int i = 0; i < g.n; ++i) err = std::max(err, (r.phi[i] - d.phi(g.at(i))).norm());
  CHECK(err < 1e-4 * d.sup_phi);
  CHECK(r.phi[0].norm() < 1e-15);

  // The derivative of the drift is -grad of (p - pbar), a function of time only.
  for (int i = 4; i < g.n - 4; i += 7) {
    const double dt = g.step();
    const Vec3 dphi = (r.phi[i + 1] - r.phi[i - 1]) / (2 * dt);
    CHECK((dphi - d.dphi(g.at(i))).norm() < 1e-2 * d.sup_phi);
  }

  const VectorField v = remove_drift(par.u, r);
  const ScalarField q = remove_drift(par.p, r);
  double ue = 0.0;
  for (double t : {0.25, 0.5, 1.0}) {
    const double c = q(Vec3::Zero(), t) - tg.p(Vec3::Zero(), t);
    for (const Vec3& x : {Vec3(0.3, -0.7, 0.2), Vec3(2.0, 1.0, -1.0), Vec3(-1.5, 0.4, 0.0)}) {
      ue = std::max(ue, (v(x, t) - tg.u(x, t)).norm());
      // phi' is the slope of the piecewise-linear drift: O(h) error times |x|.
      CHECK(std::abs(q(x, t) - tg.p(x, t) - c) < 2e-2);
    }
  }
  CHECK(ue < 1e-3);
}

TEST_CASE("supplying the full pressure removes the drift term by term") {
  const FieldPair tg = make_taylor_green(1.0);
  const DriftSpec d = make_sinusoidal_drift(Vec3(0.2, 0.1, 0.0), 2.0);
  const FieldPair par = inject_drift(tg, d, 1.0);
  const TestBump beta;
  const PressurePairing full = [&](double t) { return direct_pairing(par.p, beta, t); };
  const DriftRecord r = extract_drift(par.u, par.u, beta, TimeGrid(0.0, 1.0, 33), DriftOptions{}, full);
  CHECK(r.sup_phi() < 1e-3 * d.sup_phi);
}

TEST_CASE("drift does not depend on the bump") {
  const FieldPair tg = make_taylor_green(1.0);
  const DriftSpec d = make_sinusoidal_drift(Vec3(0.0, 0.4, 0.0), 1.0);
  const FieldPair par = inject_drift(tg, d, 1.0);
  const TimeGrid g(0.0, 1.0, 17);
  const DriftRecord a = extract_drift(par.u, par.u, TestBump(), g);
  const DriftRecord b = extract_drift(par.u, par.u, TestBump(Vec3(1.0, -0.5, 0.5), 0.7, 1.5), g);
  for (int i = 0; i < g.n; ++i) CHECK((a.phi[i] - b.phi[i]).norm() < 2e-3);
}

TEST_CASE("single-time drift agrees with the record") {
  const FieldPair tg = make_taylor_green(1.0);
  const DriftSpec d = make_sinusoidal_drift(Vec3(0.3, 0, 0), 1.0);
  const FieldPair par = inject_drift(tg, d, 1.0);
  const Vec3 phi = drift_phi(par.u, par.u, TestBump(), 0.5, DriftOptions{}, 17);
  CHECK((phi - d.phi(0.5)).norm() < 1e-4);
  CHECK_THROWS_AS(drift_phi(par.u, par.u, TestBump(), 0.0), Error);
  CHECK_THROWS_AS(extract_drift(par.u, par.u, TestBump(), TimeGrid(0.5, 1.0, 4)), Error);
  CHECK_THROWS_AS(extract_drift(par.u, par.u, TestBump(), TimeGrid(0.0, 0.0, 1)), Error);
}

TEST_CASE("scaled drift of a decaying vortex shrinks with the radius") {
  const VectorField gv = make_gaussian_vortex(1.0, 1.0, Vec3(1.0, 0.5, -0.3));
  const TimeGrid g(0.0, 1.0, 9);
  const DriftRecord r4 = drift_phi_scaled(gv, gv, TestBump(), 4.0, g);
  const DriftRecord r8 = drift_phi_scaled(gv, gv, TestBump(), 8.0, g);
  CHECK(r8.l1_norm() < r4.l1_norm());
  CHECK(r4.sup_Phi() <= r4.l1_norm() * (1 + 1e-12));
  CHECK(r8.sup_Phi() <= r8.l1_norm() * (1 + 1e-12));
}

TEST_CASE("normalize is idempotent") {
  const FieldPair tg = make_taylor_green(1.0);
  const FieldPair par = inject_drift(tg, make_sinusoidal_drift(Vec3(0.3, 0, 0)), 1.0);
  const TimeGrid g(0.0, 1.0, 33);
  const Normalized n1 = normalize(par.u, par.u, TestBump(), g);
  const Normalized n2 = normalize(n1.u, n1.u, TestBump(), g);
  CHECK(n1.drift.sup_phi() > 0.2);
  CHECK(n2.drift.sup_phi() < 1e-4);
  CHECK((n1.flux(Vec3(0.1, 0.2, 0.3), 0.5) - n1.u(Vec3(0.1, 0.2, 0.3), 0.5) * n1.u(Vec3(0.1, 0.2, 0.3), 0.5).transpose())
            .norm() < 1e-15);
}
