#include "nspg/decay.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nspg/quadrature.hpp"
#include "resolution.hpp"

namespace nspg {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Vanishes: return "vanishes";
    case Verdict::Persists: return "persists";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

// ---------------------------------------------------------------- fits

ScalingFit scaling_fit(std::span<const SweepPoint> sweep) {
  if (sweep.size() < 3) throw Error("scaling_fit: need at least three sweep points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : sweep) {
    if (!(p.value > 0.0) || !(p.param > 0.0)) throw Error("scaling_fit: nonpositive value in sweep");
    const double x = std::log(p.param), y = std::log(p.value);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(sweep.size());
  const double den = n * sxx - sx * sx;
  if (!(den > 0.0)) throw Error("scaling_fit: sweep parameters must differ");
  ScalingFit f;
  f.exponent = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.exponent * sx) / n;
  double ss = 0.0;
  for (const auto& p : sweep) {
    const double e = std::log(p.value) - (f.intercept + f.exponent * std::log(p.param));
    ss += e * e;
  }
  f.residual = std::sqrt(ss / n);
  return f;
}

Verdict classify(std::span<const SweepPoint> sweep) {
  if (sweep.empty()) return Verdict::Inconclusive;
  bool any_zero = false;
  for (const auto& p : sweep) {
    if (p.value < 0.0 || !std::isfinite(p.value)) return Verdict::Inconclusive;
    any_zero = any_zero || p.value == 0.0;
  }
  if (any_zero) {
    bool nonincreasing = true;
    for (std::size_t i = 1; i < sweep.size(); ++i) nonincreasing = nonincreasing && sweep[i].value <= sweep[i - 1].value;
    return nonincreasing && sweep.back().value == 0.0 ? Verdict::Vanishes : Verdict::Inconclusive;
  }
  if (sweep.size() < 3) return Verdict::Inconclusive;
  const ScalingFit f = scaling_fit(sweep);
  if (f.exponent < -0.5 && f.residual < 0.1) return Verdict::Vanishes;

  std::vector<double> slopes;
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    slopes.push_back(std::log(sweep[i].value / sweep[i - 1].value) / std::log(sweep[i].param / sweep[i - 1].param));
  }
  bool steepening = true;
  for (std::size_t i = 0; i < slopes.size(); ++i) {
    steepening = steepening && slopes[i] < -0.5;
    if (i > 0) steepening = steepening && slopes[i] <= slopes[i - 1] + 1e-9;
  }
  if (steepening) return Verdict::Vanishes;

  double mx = 0.0;
  for (const auto& p : sweep) mx = std::max(mx, p.value);
  if (f.exponent > -0.1 && sweep.back().value >= 0.25 * mx) return Verdict::Persists;
  return Verdict::Inconclusive;
}

std::string DecayReport::summary() const {
  std::ostringstream os;
  os << "condition=" << condition << " field=" << field << " points=" << sweep.size();
  if (fit) os << " exponent=" << fit->exponent << " residual=" << fit->residual;
  os << " verdict=" << to_string(verdict);
  if (lower_bound) os << " (lower bound)";
  if (time_clipped) os << " (time clipped)";
  return os.str();
}

// ---------------------------------------------------------------- integrals

namespace {

double sq(const Vec3& v) { return v.squaredNorm(); }
double sq(double v) { return v * v; }

template <class Field, class G>
double ball_quadrature(const Field& u, const Vec3& x0, double R, double t, double scale, G&& g) {
  const FieldTraits& tr = u.traits();
  const auto [slo, shi] = detail::support_range(tr, x0);
  const double lo = std::min(slo, R), hi = std::min(shi, R);
  if (!(hi > lo)) return 0.0;
  const double width = std::min(R / 4.0, detail::field_width(tr));
  const int pieces = std::max(1, static_cast<int>(std::ceil((hi - lo) / width - 1e-12)));
  const double step = (hi - lo) / pieces;
  const int nr = std::max(4, static_cast<int>(std::ceil(12.0 * scale)));
  double acc = 0.0;
  for (int q = 0; q < pieces; ++q) {
    const double a = lo + q * step, b = a + step;
    const Rule1D rule = gauss_legendre(nr, a, b);
    const AngularOrder ao = angular_order_for_degree(scale * 2.0 * detail::field_degree(tr, b) + 4.0);
    const SphereRule& sr = cached_sphere_rule(ao.n_theta, ao.n_phi);
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double r = rule.x[i];
      double s = 0.0;
      for (std::size_t k = 0; k < sr.size(); ++k) s += sr.w[k] * g(u(x0 + r * sr.dir[k], t));
      acc += rule.w[i] * r * r * s;
    }
  }
  return acc;
}

template <class Field, class G>
double ball_integral(const Field& u, const Vec3& x0, double R, double t, G&& g) {
  if (!(R > 0.0)) throw Error("ball integral: R must be positive");
  double scale = 1.0;
  double v = ball_quadrature(u, x0, R, t, scale, g);
  for (int it = 0; it < 3; ++it) {
    scale *= 1.5;
    const double w = ball_quadrature(u, x0, R, t, scale, g);
    const bool ok = std::abs(w - v) <= 1e-9 * std::abs(w) + 1e-300;
    v = w;
    if (ok) break;
  }
  return v;
}

template <class Field>
double ball_sq(const Field& u, const Vec3& x0, double R, double t) {
  if (u.ball_integral_sq) return u.ball_integral_sq(x0, R, t);
  return ball_integral(u, x0, R, t, [](const auto& v) { return sq(v); });
}

template <class Field>
double space_time_sq(const Field& u, const Vec3& x0, double R, double T) {
  if (!(T > 0.0)) throw Error("space-time integral: T must be positive");
  if (u.traits().steady) return T * ball_sq(u, x0, R, 0.0);
  const std::vector<double> breaks{0.0, T};
  const Rule1D rule = composite_gauss(breaks, 12, 0.5);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) acc += rule.w[i] * ball_sq(u, x0, R, rule.x[i]);
  return acc;
}

template <class Field>
CondAValue cond_A(const Field& u, const Vec3& x0, double R, double T) {
  const bool clipped = R * R > T;
  return {space_time_sq(u, x0, R, clipped ? T : R * R), clipped};
}

template <class Field>
CondBValue cond_B(const Field& u, double R, double T, std::span<const Vec3> candidates) {
  std::vector<Vec3> own;
  if (candidates.empty()) {
    own = cond_B_candidates(u.traits(), R);
    candidates = own;
  }
  std::vector<double> vals(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) { vals[i] = space_time_sq(u, candidates[i], R, T); });
  const auto it = std::max_element(vals.begin(), vals.end());
  return {*it / (R * R * R), candidates[static_cast<std::size_t>(it - vals.begin())]};
}

template <class Field>
double cond_C(const Field& u, double R, double T) {
  return space_time_sq(u, Vec3::Zero(), R, T) / (R * R * R);
}

void finish(DecayReport& rep) {
  rep.verdict = classify(rep.sweep);
  bool positive = rep.sweep.size() >= 3;
  for (const auto& p : rep.sweep) positive = positive && p.value > 0.0 && p.param > 0.0;
  if (positive) rep.fit = scaling_fit(rep.sweep);
}

void check_increasing(std::span<const double> xs, const char* what) {
  if (xs.empty()) throw Error(std::string(what) + ": empty sweep");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw Error(std::string(what) + ": sweep parameters must increase");
  }
}

template <class Field>
DecayReport sweep_A(const Field& u, std::span<const double> ds, double R, double T, const Vec3& dir) {
  check_increasing(ds, "cond_A_sweep");
  DecayReport rep;
  rep.condition = "A";
  rep.field = u.traits().generator;
  const Vec3 e = dir.normalized();
  for (double d : ds) {
    const CondAValue v = cond_A(u, Vec3(d * e), R, T);
    rep.sweep.push_back({d, v.value});
    rep.time_clipped = rep.time_clipped || v.time_clipped;
  }
  finish(rep);
  return rep;
}

template <class Field>
DecayReport sweep_B(const Field& u, std::span<const double> Rs, double T) {
  check_increasing(Rs, "cond_B_sweep");
  DecayReport rep;
  rep.condition = "B";
  rep.field = u.traits().generator;
  rep.lower_bound = true;
  for (double R : Rs) rep.sweep.push_back({R, cond_B(u, R, T, {}).value});
  finish(rep);
  return rep;
}

template <class Field>
DecayReport sweep_C(const Field& u, std::span<const double> Rs, double T) {
  check_increasing(Rs, "cond_C_sweep");
  DecayReport rep;
  rep.condition = "C";
  rep.field = u.traits().generator;
  for (double R : Rs) rep.sweep.push_back({R, cond_C(u, R, T)});
  finish(rep);
  return rep;
}

}  // namespace

double ball_integral_sq(const VectorField& u, const Vec3& x0, double R, double t) { return ball_sq(u, x0, R, t); }
double ball_integral_sq(const ScalarField& u, const Vec3& x0, double R, double t) { return ball_sq(u, x0, R, t); }
double space_time_integral_sq(const VectorField& u, const Vec3& x0, double R, double T) {
  return space_time_sq(u, x0, R, T);
}
double space_time_integral_sq(const ScalarField& u, const Vec3& x0, double R, double T) {
  return space_time_sq(u, x0, R, T);
}

CondAValue cond_A_estimator(const VectorField& u, const Vec3& x0, double R, double T) { return cond_A(u, x0, R, T); }
CondAValue cond_A_estimator(const ScalarField& u, const Vec3& x0, double R, double T) { return cond_A(u, x0, R, T); }

std::vector<Vec3> cond_B_candidates(const FieldTraits& tr, double R) {
  std::vector<Vec3> c{Vec3::Zero()};
  for (const auto& h : tr.hot_spots) c.push_back(h);
  const double reach = std::isfinite(tr.truncation_radius) ? tr.truncation_radius : 16.0 * R;
  for (int a = 0; a < 3; ++a) {
    for (double s : {1.0, -1.0}) {
      for (double d = R / 2.0; d <= reach; d *= 2.0) c.push_back(s * d * Vec3::Unit(a));
    }
  }
  return c;
}

CondBValue cond_B_estimator(const VectorField& u, double R, double T, std::span<const Vec3> candidates) {
  return cond_B(u, R, T, candidates);
}
CondBValue cond_B_estimator(const ScalarField& u, double R, double T, std::span<const Vec3> candidates) {
  return cond_B(u, R, T, candidates);
}

double cond_C_estimator(const VectorField& u, double R, double T) { return cond_C(u, R, T); }
double cond_C_estimator(const ScalarField& u, double R, double T) { return cond_C(u, R, T); }

double data_decay_estimator(const VectorField& u0, double R) {
  return ball_integral(u0, Vec3::Zero(), R, 0.0, [](const Vec3& v) { return v.norm(); }) / (R * R * R);
}

DecayReport cond_A_sweep(const VectorField& u, std::span<const double> ds, double R, double T, const Vec3& dir) {
  return sweep_A(u, ds, R, T, dir);
}
DecayReport cond_A_sweep(const ScalarField& u, std::span<const double> ds, double R, double T, const Vec3& dir) {
  return sweep_A(u, ds, R, T, dir);
}
DecayReport cond_B_sweep(const VectorField& u, std::span<const double> Rs, double T) { return sweep_B(u, Rs, T); }
DecayReport cond_B_sweep(const ScalarField& u, std::span<const double> Rs, double T) { return sweep_B(u, Rs, T); }
DecayReport cond_C_sweep(const VectorField& u, std::span<const double> Rs, double T) { return sweep_C(u, Rs, T); }
DecayReport cond_C_sweep(const ScalarField& u, std::span<const double> Rs, double T) { return sweep_C(u, Rs, T); }

DecayReport data_sweep(const VectorField& u0, std::span<const double> Rs) {
  check_increasing(Rs, "data_sweep");
  DecayReport rep;
  rep.condition = "data-A0";
  rep.field = u0.traits().generator;
  for (double R : Rs) rep.sweep.push_back({R, data_decay_estimator(u0, R)});
  finish(rep);
  return rep;
}

DecayReport dyadic_cond_B_sweep(int k_max, std::span<const int> ks, double T) {
  const ScalarField f = make_dyadic_balls(k_max);
  DecayReport rep;
  rep.condition = "B";
  rep.field = f.traits().generator;
  rep.lower_bound = true;
  for (int k : ks) {
    if (k < 1 || k > k_max) throw Error("dyadic_cond_B_sweep: k outside 1..k_max");
    if (!rep.sweep.empty() && !(k > rep.sweep.back().param)) throw Error("dyadic_cond_B_sweep: k must increase");
    const Vec3 xk(std::ldexp(1.0, k), 0.0, 0.0);
    const std::vector<Vec3> cand{xk};
    rep.sweep.push_back({static_cast<double>(k), cond_B(f, static_cast<double>(k), T, cand).value});
  }
  finish(rep);
  return rep;
}

// ---------------------------------------------------------------- matrix

bool ImplicationMatrix::all_hold() const {
  return !bullets.empty() && std::all_of(bullets.begin(), bullets.end(), [](const auto& b) { return b.holds; });
}

ImplicationMatrix implication_matrix(double T) {
  ImplicationMatrix m;
  const std::vector<double> far_d{4.0, 8.0, 16.0, 32.0};
  const std::vector<double> radii{8.0, 16.0, 32.0, 64.0};

  {
    const ScalarField cyl = make_cylinder_indicator();
    m.rows.push_back({"cylinder", sweep_A(cyl, far_d, 1.0, T, Vec3::UnitX()), sweep_B(cyl, radii, T),
                      sweep_C(cyl, radii, T)});
  }
  {
    const int k_max = 12;
    const ScalarField dy = make_dyadic_balls(k_max);
    const std::vector<int> ks{3, 4, 5, 6, 7, 8};
    std::vector<double> centers, dyadic_r;
    for (int k : ks) {
      centers.push_back(std::ldexp(1.0, k));
      dyadic_r.push_back(std::ldexp(1.0, k));
    }
    m.rows.push_back({"dyadic-balls", sweep_A(dy, centers, 1.0, T, Vec3::UnitX()), dyadic_cond_B_sweep(k_max, ks, T),
                      sweep_C(dy, dyadic_r, T)});
  }
  {
    const VectorField g = make_gaussian_vortex(1.0, 1.0);
    const std::vector<double> d{2.0, 3.0, 4.0, 5.0};
    const std::vector<double> gr{4.0, 8.0, 16.0, 32.0};
    m.rows.push_back({"gaussian-vortex", sweep_A(g, d, 1.0, T, Vec3::UnitX()), sweep_B(g, gr, T), sweep_C(g, gr, T)});
  }

  auto implies = [&](const char* name, auto lhs, auto rhs) {
    ImplicationBullet b{name, "", false};
    bool any = false, ok = true;
    for (const auto& r : m.rows) {
      if (lhs(r).verdict != Verdict::Vanishes) continue;
      any = true;
      const bool good = rhs(r).verdict == Verdict::Vanishes;
      ok = ok && good;
      b.witness += (b.witness.empty() ? "" : ";") + r.field + (good ? "" : "(violated)");
    }
    b.holds = any && ok;
    m.bullets.push_back(b);
  };
  auto A = [](const ImplicationRow& r) -> const DecayReport& { return r.A; };
  auto B = [](const ImplicationRow& r) -> const DecayReport& { return r.B; };
  auto C = [](const ImplicationRow& r) -> const DecayReport& { return r.C; };
  implies("A => B", A, B);
  implies("B => C", B, C);

  const auto& cyl = m.rows[0];
  m.bullets.push_back({"B does not imply A", "cylinder",
                       cyl.B.verdict == Verdict::Vanishes && cyl.A.verdict == Verdict::Persists});
  const auto& dy = m.rows[1];
  m.bullets.push_back({"C does not imply B", "dyadic-balls",
                       dy.C.verdict == Verdict::Vanishes && dy.B.verdict == Verdict::Persists});
  return m;
}

}  // namespace nspg
