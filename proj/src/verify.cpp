#include "nspg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>

#include "ball_nodes.hpp"
#include "nspg/quadrature.hpp"

namespace nspg {

// ---------------------------------------------------------------- reports

bool CheckReport::pass() const {
  return !residuals.empty() && std::all_of(residuals.begin(), residuals.end(), [](const Residual& r) { return r.ok(); });
}

double CheckReport::max_residual() const {
  double m = 0.0;
  for (const auto& r : residuals) m = std::max(m, r.value);
  return m;
}

std::string CheckReport::summary() const {
  std::ostringstream os;
  os << name << ": " << (pass() ? "pass" : "fail");
  for (const auto& r : residuals) os << " " << r.name << "=" << r.value << "/" << r.tolerance;
  return os.str();
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double field_sup(const VectorField& u, double t) {
  if (u.traits().sup_bound) return *u.traits().sup_bound;
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> d(-4.0, 4.0);
  double m = 0.0;
  for (int i = 0; i < 256; ++i) m = std::max(m, u(Vec3(d(gen), d(gen), d(gen)), t).norm());
  return m;
}

/// Smooth bump on (lo, hi) with value exp(-1) at the midpoint's neighbourhood scale.
double time_bump(double t, double lo, double hi) {
  const double s = (2.0 * t - lo - hi) / (hi - lo);
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s));
}

double time_bump_dt(double t, double lo, double hi) {
  const double s = (2.0 * t - lo - hi) / (hi - lo);
  if (std::abs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return std::exp(-1.0 / q) * (-2.0 * s / (q * q)) * 2.0 / (hi - lo);
}

Rule1D time_rule(double lo, double hi) {
  const std::vector<double> breaks{lo, hi};
  return composite_gauss(breaks, 16, (hi - lo) / 8.0);
}

}  // namespace

// ---------------------------------------------------------------- expansion values

std::vector<double> expansion_at(const FluxField& f, const BallSpec& ball, double t, std::span<const Vec3> pts,
                                 const PointOptions& near, const FarOptions& far) {
  std::vector<double> v = near_pressure_at(f, ball, t, pts, near);
  const FarResult fr = far_pressure(f, ball, t, pts, far);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += fr.values[i];
  return v;
}

ScalarField expansion_field(const FluxField& f, const BallSpec& ball, const PointOptions& near,
                            const FarOptions& far) {
  struct Shared {
    std::mutex mu;
    ShellPlan plan;
  };
  auto shared = std::make_shared<Shared>();
  FieldTraits tr;
  tr.generator = "expansion(" + f.traits.generator + ")";
  tr.decay = DecayClass::UlocOnly;
  tr.length_scale = f.traits.length_scale;
  tr.wavenumber = f.traits.wavenumber;
  return ScalarField(
      [f, ball, near, far, shared](const Vec3& x, double t) {
        const Vec3 pts[1] = {x};
        const double n = near_pressure_at(f, ball, t, pts, near)[0];
        ShellPlan plan;
        {
          std::lock_guard lock(shared->mu);
          plan = shared->plan;
        }
        const FarResult fr = far_pressure(f, ball, t, pts, far, &plan);
        {
          std::lock_guard lock(shared->mu);
          if (shared->plan.empty()) shared->plan = plan;
        }
        return n + fr.values[0];
      },
      tr);
}

// ---------------------------------------------------------------- gauge checks

namespace {

std::vector<Vec3> axis_probes(const Vec3& c, double r) {
  std::vector<Vec3> p{c};
  for (int a = 0; a < 3; ++a) {
    p.push_back(c + r * Vec3::Unit(a));
    p.push_back(c - r * Vec3::Unit(a));
  }
  return p;
}

struct GradientMeasure {
  double pointwise = 0.0;   // max |grad| over probes, Richardson-extrapolated
  double fd_spread = 0.0;   // max |G_h - G_{h/2}|
  double weak = 0.0;        // max |<pi, d_k beta>| / int |grad beta|
};

double grad_l1(const TestBump& b) {
  return 4.0 * kPi * integrate_adaptive(
                         [&](double r) { return r * r * r * std::abs(b.dprofile_over_r(r)); }, 0.0, b.radius(), 1e-12);
}

GradientMeasure measure_gradient(const FluxField& f, const GaugeOptions& opt) {
  const std::vector<Vec3> probes = axis_probes(opt.ball.x0, opt.probe_radius);
  std::vector<Vec3> pts;
  for (double h : {opt.h, opt.h / 2.0}) {
    for (const auto& x : probes) {
      for (int a = 0; a < 3; ++a) {
        pts.push_back(x + h * Vec3::Unit(a));
        pts.push_back(x - h * Vec3::Unit(a));
      }
    }
  }
  const std::vector<double> v = expansion_at(f, opt.ball, opt.t, pts, {}, opt.far);
  GradientMeasure g;
  const std::size_t per = probes.size() * 6;
  for (std::size_t q = 0; q < probes.size(); ++q) {
    Vec3 g1, g2;
    for (int a = 0; a < 3; ++a) {
      g1[a] = (v[q * 6 + 2 * a] - v[q * 6 + 2 * a + 1]) / (2.0 * opt.h);
      g2[a] = (v[per + q * 6 + 2 * a] - v[per + q * 6 + 2 * a + 1]) / opt.h;
    }
    const Vec3 rich = (4.0 * g2 - g1) / 3.0;
    g.pointwise = std::max(g.pointwise, rich.norm());
    g.fd_spread = std::max(g.fd_spread, (g1 - g2).norm());
  }
  const double rb = opt.ball.R / 2.0;
  const std::vector<Vec3> centers{opt.ball.x0, opt.ball.x0 + Vec3(0.3, 0.0, 0.0) * opt.ball.R,
                                  opt.ball.x0 + Vec3(0.0, -0.25, 0.2) * opt.ball.R};
  for (const auto& c : centers) {
    const TestBump b(c, rb);
    PairingEngine e(f, b, opt.far);
    g.weak = std::max(g.weak, e(opt.t).total().norm() / grad_l1(b));
  }
  return g;
}

void add_gradient(CheckReport& rep, const std::string& tag, const GradientMeasure& g, double scale, double tol) {
  const double s = scale > 0.0 ? scale : 1.0;
  rep.residuals.push_back({tag + "pointwise", g.pointwise / s, tol});
  rep.residuals.push_back({tag + "weak", g.weak / s, tol});
  rep.config.emplace_back(tag + "fd_spread", num(g.fd_spread / s));
}

void gauge_config(CheckReport& rep, const GaugeOptions& opt) {
  rep.config.emplace_back("ball", "x0=(" + num(opt.ball.x0[0]) + "," + num(opt.ball.x0[1]) + "," +
                                      num(opt.ball.x0[2]) + ") R=" + num(opt.ball.R));
  rep.config.emplace_back("t", num(opt.t));
  rep.config.emplace_back("h", num(opt.h));
  rep.config.emplace_back("tol_far", num(opt.far.tol));
}

}  // namespace

CheckReport check_lemma_zero(const Vec3& c, const VectorField& u, const GaugeOptions& opt) {
  if (!u.traits().divergence_free && !opt.allow_nondivergent) {
    throw Error("check_lemma_zero: u is not divergence-free");
  }
  CheckReport rep;
  rep.name = "lemma_zero";
  gauge_config(rep, opt);
  const double sup_u = field_sup(u, opt.t);
  const FluxField f = outer_flux([c](double) { return c; }, c.norm(), u);
  add_gradient(rep, "", measure_gradient(f, opt), c.norm() * sup_u, opt.tol);
  return rep;
}

CheckReport check_cross_terms(std::function<Vec3(double)> c, double sup_c, const VectorField& u,
                              const GaugeOptions& opt) {
  if (!u.traits().divergence_free && !opt.allow_nondivergent) {
    throw Error("check_cross_terms: u is not divergence-free");
  }
  CheckReport rep;
  rep.name = "cross_terms";
  gauge_config(rep, opt);
  const double sup_u = field_sup(u, opt.t);

  const FluxField cu = outer_flux(c, sup_c, u);
  FluxField uc{[cu](const Vec3& x, double t) { return Mat3(cu(x, t).transpose()); }, cu.traits};
  FieldTraits tr = u.traits();
  tr.generator = "cc";
  tr.sup_bound = 3.0 * sup_c * sup_c;
  tr.support.reset();
  if (tr.decay != DecayClass::BoundedPeriodic) tr.decay = DecayClass::UlocOnly;
  FluxField cc{[c](const Vec3&, double t) {
                 const Vec3 a = c(t);
                 return Mat3(a * a.transpose());
               },
               tr};
  add_gradient(rep, "cu_", measure_gradient(cu, opt), sup_c * sup_u, opt.tol);
  add_gradient(rep, "uc_", measure_gradient(uc, opt), sup_c * sup_u, opt.tol);
  add_gradient(rep, "cc_", measure_gradient(cc, opt), sup_c * sup_c, opt.tol);
  return rep;
}

// ---------------------------------------------------------------- harmonicity

CheckReport check_harmonic(const ScalarField& p, const VectorField& u, const HarmonicOptions& opt) {
  CheckReport rep;
  rep.name = "harmonic";
  rep.config.emplace_back("t", num(opt.t));
  rep.config.emplace_back("h", num(opt.h));
  rep.config.emplace_back("ball_R", num(opt.ball.R));
  const std::vector<Vec3> probes = axis_probes(opt.ball.x0, opt.probe_radius);
  std::vector<Vec3> pts;
  for (const auto& x : probes) {
    pts.push_back(x);
    for (int a = 0; a < 3; ++a) {
      pts.push_back(x + opt.h * Vec3::Unit(a));
      pts.push_back(x - opt.h * Vec3::Unit(a));
    }
  }
  const std::vector<double> pbar = expansion_at(momentum_flux(u), opt.ball, opt.t, pts, {}, opt.far);
  std::vector<double> d(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) d[i] = p(pts[i], opt.t) - pbar[i];
  double worst = 0.0;
  for (std::size_t q = 0; q < probes.size(); ++q) {
    const std::size_t b = q * 7;
    double lap = 0.0;
    for (int a = 0; a < 3; ++a) lap += d[b + 1 + 2 * a] + d[b + 2 + 2 * a] - 2.0 * d[b];
    worst = std::max(worst, std::abs(lap) / (opt.h * opt.h));
  }
  rep.residuals.push_back({"laplacian", worst, opt.tol});
  return rep;
}

// ---------------------------------------------------------------- weak form

TemporalProfile interior_profile(double T) {
  const double lo = T / 4.0, hi = 3.0 * T / 4.0;
  return {"interior", [=](double t) { return time_bump(t, lo, hi); }, [=](double t) { return time_bump_dt(t, lo, hi); },
          lo, hi};
}

TemporalProfile initial_profile(double T) {
  auto chi = [T](double t) {
    const double s = t / T;
    if (s >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
  };
  auto dchi = [T](double t) {
    const double s = t / T;
    if (s >= 1.0) return 0.0;
    const double q = 1.0 - s * s;
    return std::exp(1.0 - 1.0 / q) * (-2.0 * s / (q * q)) / T;
  };
  return {"initial", chi, dchi, 0.0, T};
}

std::vector<TestFunction> test_function_library(double T, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<Vec3> centers;
  for (int i = 0; i < 3; ++i) centers.emplace_back(d(gen), d(gen), d(gen));
  std::vector<TestFunction> lib;
  for (double s : {0.5, 1.0, 2.0}) {
    for (const auto& c : centers) {
      lib.push_back({TestBump(c, s), interior_profile(T)});
      lib.push_back({TestBump(c, s), initial_profile(T)});
    }
  }
  return lib;
}

CheckReport check_ns_residual(const VectorField& u, const ScalarField& p, const VectorField& u0,
                              const std::vector<TestFunction>& library, const WeakOptions& opt) {
  CheckReport rep;
  rep.name = "ns_residual";
  rep.config.emplace_back("nu", num(opt.nu));
  rep.config.emplace_back("T", num(opt.T));
  rep.config.emplace_back("test_functions", std::to_string(library.size()));
  FieldTraits tr = u.traits();
  tr.wavenumber = std::max(tr.wavenumber, p.traits().wavenumber);
  tr.length_scale = std::min(tr.length_scale, p.traits().length_scale);

  std::vector<Vec3> res(library.size()), scale(library.size());
  parallel_for(library.size(), [&](std::size_t i) {
    const TestBump& b = library[i].space;
    const TemporalProfile& tp = library[i].time;
    const detail::BallNodes nodes = detail::ball_nodes(tr, b.center(), b.radius(), 2.0);
    const Rule1D tr_rule = time_rule(tp.lo, tp.hi);
    std::vector<double> phi(nodes.x.size()), lap(nodes.x.size());
    std::vector<Vec3> grad(nodes.x.size());
    for (std::size_t n = 0; n < nodes.x.size(); ++n) {
      phi[n] = b.profile(nodes.r[n]);
      lap[n] = b.laplacian_radial(nodes.r[n]);
      grad[n] = b.dprofile_over_r(nodes.r[n]) * (nodes.x[n] - b.center());
    }
    Vec3 A = Vec3::Zero(), V = Vec3::Zero(), N = Vec3::Zero(), P = Vec3::Zero(), I = Vec3::Zero();
    for (std::size_t k = 0; k < tr_rule.size(); ++k) {
      const double t = tr_rule.x[k], wt = tr_rule.w[k];
      const double chi = tp.chi(t), dchi = tp.dchi(t);
      if (chi == 0.0 && dchi == 0.0) continue;
      for (std::size_t n = 0; n < nodes.x.size(); ++n) {
        if (phi[n] == 0.0 && lap[n] == 0.0) continue;
        const double w = wt * nodes.w[n];
        const Vec3 v = u(nodes.x[n], t);
        A += (w * phi[n] * dchi) * v;
        V += (w * opt.nu * chi * lap[n]) * v;
        N += (w * chi * v.dot(grad[n])) * v;
        P += (w * chi * p(nodes.x[n], t)) * grad[n];
      }
    }
    const double chi0 = tp.chi(0.0);
    if (chi0 != 0.0) {
      for (std::size_t n = 0; n < nodes.x.size(); ++n) I += (nodes.w[n] * phi[n] * chi0) * u0(nodes.x[n], 0.0);
    }
    res[i] = A + V + N + P + I;
    scale[i] = A.cwiseAbs() + V.cwiseAbs() + N.cwiseAbs() + P.cwiseAbs() + I.cwiseAbs();
  });
  for (std::size_t i = 0; i < library.size(); ++i) {
    const auto& b = library[i].space;
    const double sc = scale[i].maxCoeff();
    for (int k = 0; k < 3; ++k) {
      const double r = sc > 0.0 ? std::abs(res[i][k]) / sc : std::abs(res[i][k]);
      std::ostringstream name;
      name << library[i].time.name << "_s" << b.radius() << "_c" << (i / 2) % 3 << "_k" << k + 1;
      rep.residuals.push_back({name.str(), r, opt.tol});
    }
  }
  return rep;
}

// ---------------------------------------------------------------- data attainment

CheckReport check_data_attainment(const VectorField& u, const VectorField& u0, const AttainmentOptions& opt) {
  if (opt.levels < 2) throw Error("check_data_attainment: need at least two levels");
  CheckReport rep;
  rep.name = "data_attainment";
  std::vector<double> gaps;
  for (int l = 0; l < opt.levels; ++l) {
    const double t = opt.T / std::ldexp(8.0, l);
    double g = 0.0;
    for (const auto& K : opt.compacta) {
      const detail::BallNodes nodes = detail::ball_nodes(u.traits(), K.x0, K.R, 1.0);
      for (std::size_t n = 0; n < nodes.x.size(); ++n) g += nodes.w[n] * (u(nodes.x[n], t) - u0(nodes.x[n], 0.0)).norm();
    }
    gaps.push_back(g);
    rep.config.emplace_back("gap_t=" + num(t), num(g));
  }
  double increase = 0.0;
  for (std::size_t i = 1; i < gaps.size(); ++i) increase = std::max(increase, gaps[i] - gaps[i - 1]);
  const double first = gaps.front();
  rep.residuals.push_back({"monotone_violation", first > 0.0 ? increase / first : increase, 1e-12});
  rep.residuals.push_back({"final_over_initial", first > 0.0 ? gaps.back() / first : 0.0, opt.ratio});
  return rep;
}

// ---------------------------------------------------------------- local energy

EnergyWeight make_energy_weight(const TestBump& space, double t_lo, double t_hi, double amplitude) {
  if (!(t_hi > t_lo) || t_lo < 0.0) throw Error("make_energy_weight: need 0 <= t_lo < t_hi");
  EnergyWeight w;
  w.value = [=](const Vec3& x, double t) { return amplitude * space.value(x) * time_bump(t, t_lo, t_hi); };
  w.grad = [=](const Vec3& x, double t) { return Vec3(amplitude * time_bump(t, t_lo, t_hi) * space.gradient(x)); };
  w.dt = [=](const Vec3& x, double t) { return amplitude * space.value(x) * time_bump_dt(t, t_lo, t_hi); };
  w.lap = [=](const Vec3& x, double t) { return amplitude * time_bump(t, t_lo, t_hi) * space.laplacian(x); };
  w.support = BallSpec{space.center(), space.radius()};
  w.t_lo = t_lo;
  w.t_hi = t_hi;
  return w;
}

EnergyBalance local_energy_balance(const VectorField& u, const ScalarField& p, const EnergyWeight& w,
                                   const EnergyOptions& opt) {
  FieldTraits tr = u.traits();
  tr.wavenumber = std::max(tr.wavenumber, p.traits().wavenumber);
  tr.length_scale = std::min(tr.length_scale, p.traits().length_scale);
  const detail::BallNodes nodes = detail::ball_nodes(tr, w.support.x0, w.support.R, 1.5);
  const Rule1D trule = time_rule(w.t_lo, w.t_hi);
  for (std::size_t k = 0; k < trule.size(); ++k) {
    for (std::size_t n = 0; n < nodes.x.size(); n += 7) {
      if (w.value(nodes.x[n], trule.x[k]) < 0.0) throw Error("local energy: weight is negative somewhere");
    }
  }
  std::vector<EnergyBalance> parts(trule.size());
  parallel_for(trule.size(), [&](std::size_t k) {
    const double t = trule.x[k];
    EnergyBalance b;
    for (std::size_t n = 0; n < nodes.x.size(); ++n) {
      const Vec3& x = nodes.x[n];
      const double phi = w.value(x, t);
      const Vec3 g = w.grad(x, t);
      const double dt = w.dt(x, t), lap = w.lap(x, t);
      if (phi == 0.0 && dt == 0.0 && lap == 0.0 && g.isZero(0.0)) continue;
      const Vec3 v = u(x, t);
      const double v2 = v.squaredNorm();
      const Mat3 J = jacobian(u, x, t);
      b.lhs += nodes.w[n] * 2.0 * opt.nu * J.squaredNorm() * phi;
      b.rhs += nodes.w[n] * (v2 * (dt + opt.nu * lap) + (v2 + 2.0 * p(x, t)) * v.dot(g));
    }
    parts[k] = {b.lhs * trule.w[k], b.rhs * trule.w[k]};
  });
  EnergyBalance out;
  for (const auto& b : parts) {
    out.lhs += b.lhs;
    out.rhs += b.rhs;
  }
  return out;
}

CheckReport check_local_energy_equality(const VectorField& u, const ScalarField& p, const EnergyWeight& w,
                                        const EnergyOptions& opt) {
  const EnergyBalance b = local_energy_balance(u, p, w, opt);
  CheckReport rep;
  rep.name = "local_energy";
  rep.config.emplace_back("lhs", num(b.lhs));
  rep.config.emplace_back("rhs", num(b.rhs));
  rep.config.emplace_back("signed_defect", num(b.defect()));
  const double s = std::max(std::abs(b.lhs), std::abs(b.rhs));
  rep.residuals.push_back({"relative_defect", s > 0.0 ? std::abs(b.defect()) / s : 0.0, opt.tol});
  return rep;
}

}  // namespace nspg
