#include "doctest.h"

#include <cmath>

#include "nspg/decay.hpp"

using namespace nspg;

namespace {

std::vector<SweepPoint> power_law(double c, double e, std::initializer_list<double> xs) {
  std::vector<SweepPoint> out;
  for (double x : xs) out.push_back({x, c * std::pow(x, e)});
  return out;
}

// int_{R^3} |u|^2 for the gaussian vortex with amplitude a and width s:
// 4 a^2 / s^4 int (y1^2 + y2^2) exp(-2|y|^2 / s^2) dy = (2 a^2 / s^2) (pi s^2 / 2)^{3/2}.
double vortex_energy(double a, double s) { return 2.0 * a * a / (s * s) * std::pow(kPi * s * s / 2.0, 1.5); }

}  // namespace

TEST_CASE("scaling fit recovers an exact power law") {
  const auto sw = power_law(3.0, -2.0, {4, 8, 16, 32});
  const ScalingFit f = scaling_fit(sw);
  CHECK(f.exponent == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.residual < 1e-12);
  const auto flat = power_law(0.7, 0.0, {1, 2, 4});
  CHECK(std::abs(scaling_fit(flat).exponent) < 1e-14);
  const std::vector<SweepPoint> two = {{1, 1}, {2, 1}};
  const std::vector<SweepPoint> zero = {{1, 1}, {2, 0}, {4, 1}};
  CHECK_THROWS_AS(scaling_fit(two), Error);
  CHECK_THROWS_AS(scaling_fit(zero), Error);
}

TEST_CASE("verdicts") {
  CHECK(classify(power_law(1.0, -2.0, {1, 2, 4, 8})) == Verdict::Vanishes);
  CHECK(classify(power_law(1.0, -0.6, {1, 2, 4, 8})) == Verdict::Vanishes);
  CHECK(classify(power_law(4.2, 0.0, {1, 2, 4, 8})) == Verdict::Persists);
  CHECK(classify(power_law(1.0, 1.0, {1, 2, 4})) == Verdict::Persists);
  CHECK(classify(power_law(1.0, -0.3, {1, 2, 4, 8})) == Verdict::Inconclusive);
  std::vector<SweepPoint> gauss;
  for (double d : {2.0, 3.0, 4.0, 5.0}) gauss.push_back({d, std::exp(-d * d)});
  CHECK(classify(gauss) == Verdict::Vanishes);
  const std::vector<SweepPoint> to_zero = {{1, 1.0}, {2, 0.1}, {4, 0.0}, {8, 0.0}};
  CHECK(classify(to_zero) == Verdict::Vanishes);
  // Noisy, not a power law, no trend.
  const std::vector<SweepPoint> noisy = {{1, 1.0}, {2, 0.05}, {4, 0.9}, {8, 0.04}};
  CHECK(classify(noisy) == Verdict::Inconclusive);
  CHECK(to_string(Verdict::Vanishes) == "vanishes");
  CHECK(to_string(Verdict::Persists) == "persists");
  CHECK(to_string(Verdict::Inconclusive) == "inconclusive");
}

TEST_CASE("ball integral of the gaussian vortex captures its total energy") {
  const VectorField g = make_gaussian_vortex(1.5, 0.8, Vec3(0.2, 0.0, -0.1));
  CHECK(ball_integral_sq(g, Vec3(0.2, 0.0, -0.1), 6.0, 0.0) ==
        doctest::Approx(vortex_energy(1.5, 0.8)).epsilon(1e-9));
  // 6 widths: the neglected tail is below exp(-72).
  const double full = ball_integral_sq(g, Vec3(0.2, 0.0, -0.1), 4.8, 0.0);
  CHECK(full == doctest::Approx(vortex_energy(1.5, 0.8)).epsilon(1e-9));
  CHECK(ball_integral_sq(g, Vec3(50, 0, 0), 1.0, 0.0) == 0.0);
  // Steady: the space-time integral is T times the spatial one.
  CHECK(space_time_integral_sq(g, Vec3::Zero(), 1.0, 2.0) ==
        doctest::Approx(2.0 * ball_integral_sq(g, Vec3::Zero(), 1.0, 0.0)).epsilon(1e-12));
}

TEST_CASE("constant field quantities") {
  const VectorField c = make_constant_field(Vec3(0.0, 3.0, 4.0));
  CHECK(ball_integral_sq(c, Vec3(1, 1, 1), 2.0, 0.0) == doctest::Approx(25.0 * 4.0 * kPi * 8.0 / 3.0).epsilon(1e-10));
  CHECK(data_decay_estimator(c, 7.0) == doctest::Approx(5.0 * 4.0 * kPi / 3.0).epsilon(1e-10));
  CHECK(cond_C_estimator(c, 4.0, 1.0) == doctest::Approx(25.0 * 4.0 * kPi / 3.0).epsilon(1e-10));
}

TEST_CASE("taylor-green condition C tends to its spatial mean") {
  const FieldPair tg = make_taylor_green(1.0);
  // Mean of |u|^2 is exp(-4t) / 2, so R^-3 int int -> (4 pi / 3) (1 - e^-4) / 8.
  const double limit = 4.0 * kPi / 3.0 * (1.0 - std::exp(-4.0)) / 8.0;
  CHECK(cond_C_estimator(tg.u, 16.0, 1.0) == doctest::Approx(limit).epsilon(2e-3));
  const double radii[] = {4, 8, 16};
  CHECK(cond_C_sweep(tg.u, radii, 1.0).verdict == Verdict::Persists);
}

TEST_CASE("condition A sweeps") {
  const VectorField g = make_gaussian_vortex(1.0, 1.0);
  const double d[] = {2, 3, 4, 5};
  const DecayReport a = cond_A_sweep(g, d, 1.0, 1.0);
  CHECK(a.condition == "A");
  CHECK(a.verdict == Verdict::Vanishes);
  for (std::size_t i = 1; i < a.sweep.size(); ++i) CHECK(a.sweep[i].value < a.sweep[i - 1].value);

  const ScalarField cyl = make_cylinder_indicator();
  const double far[] = {4, 8, 16, 32};
  const DecayReport ac = cond_A_sweep(cyl, far, 1.0, 1.0);
  CHECK(ac.verdict == Verdict::Persists);
  for (const auto& p : ac.sweep) CHECK(p.value == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-10));

  const CondAValue clipped = cond_A_estimator(g, Vec3(2, 0, 0), 2.0, 1.0);
  CHECK(clipped.time_clipped);
  CHECK_FALSE(cond_A_estimator(g, Vec3(2, 0, 0), 0.5, 1.0).time_clipped);
}

TEST_CASE("condition B on the cylinder decays like R^-2") {
  const ScalarField cyl = make_cylinder_indicator();
  const double radii[] = {8, 16, 32, 64};
  const DecayReport b = cond_B_sweep(cyl, radii, 1.0);
  REQUIRE(b.fit);
  CHECK(b.fit->exponent == doctest::Approx(-2.0).epsilon(0.02));
  CHECK(b.verdict == Verdict::Vanishes);
  CHECK(b.lower_bound);
}

TEST_CASE("condition B candidates") {
  const ScalarField dy = make_dyadic_balls(6);
  const auto c = cond_B_candidates(dy.traits(), 4.0);
  bool origin = false, hot = false;
  for (const Vec3& x : c) {
    origin = origin || x.norm() == 0.0;
    hot = hot || (x - Vec3(32, 0, 0)).norm() == 0.0;
    CHECK(x.norm() <= dy.traits().truncation_radius + 1e-12);
  }
  CHECK(origin);
  CHECK(hot);
  const CondBValue v = cond_B_estimator(dy, 5.0, 1.0, std::vector<Vec3>{Vec3(32, 0, 0), Vec3(-100, 0, 0)});
  CHECK(v.argmax == Vec3(32, 0, 0));
  CHECK(v.value == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-10));
}

TEST_CASE("dyadic balls: B persists, C decays under the envelope") {
  const int ks[] = {4, 5, 6, 7, 8};
  const DecayReport b = dyadic_cond_B_sweep(12, ks, 1.0);
  CHECK(b.verdict == Verdict::Persists);
  for (const auto& p : b.sweep) CHECK(p.value == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-10));

  const ScalarField dy = make_dyadic_balls(12);
  std::vector<double> radii;
  for (int k = 3; k <= 8; ++k) radii.push_back(std::ldexp(1.0, k));
  const DecayReport c = cond_C_sweep(dy, radii, 1.0);
  CHECK(c.verdict == Verdict::Vanishes);
  for (std::size_t i = 0; i < c.sweep.size(); ++i) {
    const double k = 3.0 + i;
    CHECK(c.sweep[i].value <= std::pow(k + 1.0, 4) / std::pow(2.0, 3 * k));
  }
}

TEST_CASE("data decay of a gaussian vortex is R^-3") {
  const VectorField g = make_gaussian_vortex(1.0, 1.0);
  const double radii[] = {8, 16, 32, 64};
  const DecayReport r = data_sweep(g, radii);
  REQUIRE(r.fit);
  CHECK(r.fit->exponent == doctest::Approx(-3.0).epsilon(1e-3));
  CHECK(r.verdict == Verdict::Vanishes);
}

TEST_CASE("condition C never exceeds condition B at the same radius") {
  const ScalarField cyl = make_cylinder_indicator();
  const VectorField g = make_gaussian_vortex(1.0, 1.0, Vec3(0.5, 0, 0));
  for (double R : {2.0, 8.0}) {
    CHECK(cond_C_estimator(cyl, R, 1.0) <= cond_B_estimator(cyl, R, 1.0).value * (1 + 1e-12));
    CHECK(cond_C_estimator(g, R, 1.0) <= cond_B_estimator(g, R, 1.0).value * (1 + 1e-12));
  }
}

TEST_CASE("implication matrix") {
  const ImplicationMatrix m = implication_matrix(1.0);
  CHECK(m.rows.size() == 3u);
  REQUIRE(m.bullets.size() == 4u);
  for (const auto& b : m.bullets) {
    INFO(b.statement << ": " << b.witness);
    CHECK(b.holds);
  }
  CHECK(m.all_hold());
}
