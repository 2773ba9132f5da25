#include "doctest.h"

#include <cmath>
#include <random>

#include "nspg/fields.hpp"
#include "nspg/geometry.hpp"

using namespace nspg;

namespace {

// Independent finite-difference oracles; the library derivatives are not used.
Mat3 fd_jac(const VectorField& u, const Vec3& x, double t, double h = 1e-5) {
  Mat3 J;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = h;
    J.col(k) = (u(x + e, t) - u(x - e, t)) / (2 * h);
  }
  return J;
}

Vec3 fd_lap(const VectorField& u, const Vec3& x, double t, double h = 1e-3) {
  Vec3 acc = -6.0 * u(x, t);
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = h;
    acc += u(x + e, t) + u(x - e, t);
  }
  return acc / (h * h);
}

Vec3 fd_grad(const ScalarField& p, const Vec3& x, double t, double h = 1e-5) {
  Vec3 g;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = h;
    g[k] = (p(x + e, t) - p(x - e, t)) / (2 * h);
  }
  return g;
}

Vec3 ns_residual(const FieldPair& f, double nu, const Vec3& x, double t) {
  const double dt = 1e-5;
  const Vec3 ut = (f.u(x, t + dt) - f.u(x, t - dt)) / (2 * dt);
  return ut + fd_jac(f.u, x, t) * f.u(x, t) - nu * fd_lap(f.u, x, t) + fd_grad(f.p, x, t);
}

std::vector<Vec3> points(int n, unsigned seed, double half) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> d(-half, half);
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) out.emplace_back(d(gen), d(gen), d(gen));
  return out;
}

}  // namespace

TEST_CASE("taylor-green solves the equations pointwise") {
  for (double nu : {0.5, 1.0}) {
    const FieldPair tg = make_taylor_green(nu);
    for (const Vec3& x : points(20, 11, 4.0)) {
      for (double t : {0.1, 0.5}) {
        CHECK(ns_residual(tg, nu, x, t).norm() < 1e-5);
        CHECK(std::abs(fd_jac(tg.u, x, t).trace()) < 1e-9);
        CHECK((tg.u.jacobian(x, t) - fd_jac(tg.u, x, t)).cwiseAbs().maxCoeff() < 1e-8);
      }
    }
  }
  CHECK_THROWS_AS(make_taylor_green(0.0), Error);
}

TEST_CASE("taylor-green is periodic and bounded") {
  const FieldPair tg = make_taylor_green(1.0);
  const double L = *tg.u.traits().period;
  for (const Vec3& x : points(10, 12, 3.0)) {
    CHECK((tg.u(x, 0.3) - tg.u(Vec3(x + Vec3(L, -L, 2 * L)), 0.3)).norm() < 1e-12);
    CHECK(tg.u(x, 0.0).norm() <= *tg.u.traits().sup_bound + 1e-15);
  }
}

TEST_CASE("gaussian vortex is divergence free with a matching jacobian") {
  const VectorField g = make_gaussian_vortex(2.0, 0.7, Vec3(0.5, -0.25, 1.0));
  for (const Vec3& x : points(30, 13, 2.0)) {
    const Mat3 J = fd_jac(g, x, 0.0);
    CHECK(std::abs(J.trace()) < 1e-8);
    CHECK((g.jacobian(x, 0.0) - J).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(g(x, 0.0).norm() <= *g.traits().sup_bound * (1 + 1e-12));
  }
  CHECK(divergence(g, Vec3(0.1, 0.2, 0.3), 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  // The bound is attained on the ring |y| = w / sqrt(2) in the x1-x2 plane.
  const Vec3 ring = Vec3(0.5, -0.25, 1.0) + Vec3(0.7 / std::sqrt(2.0), 0, 0);
  CHECK(g(ring, 0.0).norm() == doctest::Approx(*g.traits().sup_bound).epsilon(1e-12));
  // Declared support radius: beyond it the field is below double precision relative to its peak.
  const Vec3 out = Vec3(0.5, -0.25, 1.0) + Vec3(0, 6.0 * 0.7, 0);
  CHECK(g(out, 0.0).norm() < 1e-14 * *g.traits().sup_bound);
}

TEST_CASE("nondivergent control has genuine divergence") {
  const VectorField c = make_nondivergent_control(1.5);
  CHECK_FALSE(c.traits().divergence_free);
  CHECK(std::abs(divergence(c, Vec3(0.2, 0.1, 0.0), 0.0)) > 1e-2);
  CHECK(max_divergence_sample(c) > 1e-2);
}

TEST_CASE("declaring a nondivergent field divergence free is refused") {
  FieldTraits tr;
  tr.generator = "bogus";
  tr.divergence_free = true;
  tr.sup_bound = 1.0;
  CHECK_THROWS_AS(VectorField([](const Vec3& x, double) { return Vec3(x[0], 0, 0); }, tr), Error);
  CHECK_THROWS_AS(VectorField(VectorField::Eval{}, FieldTraits{}), Error);
}

TEST_CASE("drift injection preserves the equations") {
  const FieldPair tg = make_taylor_green(1.0);
  const DriftSpec d = make_sinusoidal_drift(Vec3(0.3, -0.2, 0.1), 2.0);
  const FieldPair par = inject_drift(tg, d, 1.0);
  for (const Vec3& x : points(15, 14, 3.0)) {
    for (double t : {0.2, 0.7}) {
      CHECK(ns_residual(par, 1.0, x, t).norm() < 1e-5);
      CHECK(std::abs(divergence(par.u, x, t)) < 1e-9);
    }
  }
  CHECK_FALSE(par.u.traits().steady);
  CHECK(*par.u.traits().sup_bound == doctest::Approx(1.0 + Vec3(0.3, -0.2, 0.1).norm()));
}

TEST_CASE("zero drift is the identity and opposite drifts cancel") {
  const FieldPair tg = make_taylor_green(1.0);
  const FieldPair same = inject_drift(tg, make_sinusoidal_drift(Vec3::Zero()), 1.0);
  const DriftSpec d = make_sinusoidal_drift(Vec3(0.4, 0.1, -0.3), 1.5);
  DriftSpec back;
  back.phi = [d](double t) { return Vec3(-d.phi(t)); };
  back.dphi = [d](double t) { return Vec3(-d.dphi(t)); };
  back.Phi = [d](double t) { return Vec3(-d.Phi(t)); };
  back.sup_phi = d.sup_phi;
  // Composition: shift by Phi then by -Phi; the velocity offsets cancel as well.
  const FieldPair there = inject_drift(tg, d, 1.0);
  const FieldPair round = inject_drift(there, back, 1.0);
  for (const Vec3& x : points(10, 15, 3.0)) {
    CHECK((same.u(x, 0.4) - tg.u(x, 0.4)).norm() == 0.0);
    CHECK(same.p(x, 0.4) == tg.p(x, 0.4));
    CHECK((round.u(x, 0.6) - tg.u(x, 0.6)).norm() < 1e-14);
    // Pressures differ by a function of time only.
    CHECK(round.p(x, 0.6) - tg.p(x, 0.6) ==
          doctest::Approx(round.p(Vec3::Zero(), 0.6) - tg.p(Vec3::Zero(), 0.6)).epsilon(1e-10));
  }
}

TEST_CASE("inconsistent drift specs are rejected") {
  DriftSpec d = make_sinusoidal_drift(Vec3(1, 0, 0));
  d.Phi = [](double t) { return Vec3(t, 0, 0); };
  CHECK_THROWS_AS(d.validate(1.0), Error);
  DriftSpec e = make_sinusoidal_drift(Vec3(1, 0, 0));
  e.Phi = [](double t) { return Vec3(1.0 - std::cos(t) + 0.5, 0, 0); };
  CHECK_THROWS_AS(e.validate(1.0), Error);
  DriftSpec f;
  CHECK_THROWS_AS(f.validate(1.0), Error);
  CHECK_THROWS_AS(make_sinusoidal_drift(Vec3(1, 0, 0), 0.0), Error);
}

TEST_CASE("cylinder volume matches the closed form on the axis") {
  // |B_R(0) cap cylinder| = 2 pi a + 2 pi (R^2 (R - a) - (R^3 - a^3) / 3), a = sqrt(R^2 - 1)
  auto oracle = [](double R) {
    if (R <= 1.0) return 4.0 * kPi * R * R * R / 3.0;
    const double a = std::sqrt(R * R - 1.0);
    return 2.0 * kPi * a + 2.0 * kPi * (R * R * (R - a) - (R * R * R - a * a * a) / 3.0);
  };
  const ScalarField cyl = make_cylinder_indicator();
  for (double R : {0.5, 1.0, 1.5, 4.0, 32.0}) {
    CHECK(cyl.ball_integral_sq(Vec3(3.0, 0, 0), R, 0.0) == doctest::Approx(oracle(R)).epsilon(1e-10));
  }
  CHECK(ball_cylinder_volume(Vec3(0, 5, 0), 2.0) == 0.0);
  CHECK(cyl(Vec3(100, 0.5, 0.5), 0.0) == 1.0);
  CHECK(cyl(Vec3(0, 1.0, 0.1), 0.0) == 0.0);
}

TEST_CASE("disc overlap limits") {
  CHECK(disk_overlap_area(1.0, 2.0, 0.5) == doctest::Approx(kPi));
  CHECK(disk_overlap_area(1.0, 1.0, 3.0) == 0.0);
  // Two unit discs at distance 1: 2 pi / 3 - sqrt(3) / 2.
  CHECK(disk_overlap_area(1.0, 1.0, 1.0) == doctest::Approx(2.0 * kPi / 3.0 - std::sqrt(3.0) / 2.0).epsilon(1e-13));
}

TEST_CASE("dyadic balls integral on an isolated ball") {
  const ScalarField f = make_dyadic_balls(12);
  for (int k : {4, 5, 9}) {
    const Vec3 c(std::ldexp(1.0, k), 0, 0);
    CHECK(f.ball_integral_sq(c, k, 0.0) == doctest::Approx(4.0 * kPi * k * k * k / 3.0).epsilon(1e-10));
    CHECK(f(c, 0.0) == 1.0);
  }
  // Balls 2 and 3 overlap; the overlap counts four times.
  CHECK(f(Vec3(5.5, 0, 0), 0.0) == 2.0);
  CHECK(f.ball_integral_sq(Vec3(1e4, 0, 0), 10.0, 0.0) == 0.0);
  CHECK_THROWS_AS(make_dyadic_balls(0), Error);
}

TEST_CASE("grids and sampling") {
  CHECK_THROWS_AS(Grid3(Vec3::Zero(), 0.0, {4, 4, 4}), Error);
  CHECK_THROWS_AS(Grid3(Vec3::Zero(), 0.1, {1, 4, 4}), Error);
  CHECK_THROWS_AS(TimeGrid(1.0, 0.5, 4), Error);
  CHECK_THROWS_AS(TimeGrid(-1.0, 0.5, 4), Error);
  CHECK_NOTHROW(TimeGrid(0.5, 0.5, 1));
  CHECK(TimeGrid(0.5, 0.5, 1).step() == 0.0);

  FieldTraits tr;
  tr.generator = "linear";
  const ScalarField lin([](const Vec3& x, double t) { return 1.0 + 2 * x[0] - x[1] + 0.5 * x[2] + t; }, tr);
  const Grid3 g(Vec3(-1, -1, -1), 0.25, {9, 9, 9});
  const SampledField s = sample(lin, g, TimeGrid(0.0, 1.0, 3));
  CHECK(s.values.size() == 9u * 9 * 9 * 3);
  for (const Vec3& x : points(10, 16, 0.99)) {
    CHECK(s.interpolate(x, 1) == doctest::Approx(lin(x, 0.5)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(s.interpolate(Vec3(2, 0, 0), 0), Error);

  const ScalarField bad([](const Vec3& x, double) { return x[0] > 0 ? std::nan("") : 0.0; }, tr);
  CHECK_THROWS_AS(sample(bad, g, TimeGrid(0.0, 1.0, 2)), Error);

  const SampledField v = sample(make_taylor_green(1.0).u, g, TimeGrid(0.0, 1.0, 2));
  CHECK(v.rank == 3);
  CHECK(v.at(1, 2, 3, 4, 1) == make_taylor_green(1.0).u(g.node(2, 3, 4), 1.0)[1]);
}

TEST_CASE("decay class names round trip") {
  for (DecayClass d : {DecayClass::CompactSupport, DecayClass::Gaussian, DecayClass::BoundedPeriodic,
                       DecayClass::UlocOnly}) {
    CHECK(decay_class_from_string(to_string(d)) == d);
  }
  CHECK_THROWS_AS(decay_class_from_string("exotic"), Error);
}
