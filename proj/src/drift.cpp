#include "nspg/drift.hpp"

#include <algorithm>
#include <cmath>

#include "ball_nodes.hpp"

namespace nspg {

namespace {

/// Spherical product nodes on the support of beta, with the bump quantities
/// needed by the local terms precomputed per node.
struct LocalNodes {
  std::vector<Vec3> x;
  std::vector<double> w;
  std::vector<double> beta;
  std::vector<double> lap;
  std::vector<Vec3> grad;
};

LocalNodes local_nodes(const FieldTraits& tr, const TestBump& beta, double scale) {
  const detail::BallNodes b = detail::ball_nodes(tr, beta.center(), beta.radius(), scale);
  LocalNodes out;
  for (std::size_t i = 0; i < b.x.size(); ++i) {
    const double r = b.r[i];
    const double bv = beta.profile(r), lv = beta.laplacian_radial(r), dv = beta.dprofile_over_r(r);
    if (bv == 0.0 && lv == 0.0 && dv == 0.0) continue;
    out.x.push_back(b.x[i]);
    out.w.push_back(b.w[i]);
    out.beta.push_back(bv);
    out.lap.push_back(lv);
    out.grad.push_back(dv * (b.x[i] - beta.center()));
  }
  return out;
}

struct LocalValues {
  Vec3 current = Vec3::Zero();  // int u beta
  Vec3 viscous = Vec3::Zero();  // int u Lap beta
  Vec3 flux = Vec3::Zero();     // int u (u . grad beta)
};

LocalValues local_values(const LocalNodes& nodes, const VectorField& u, double t) {
  LocalValues v;
  for (std::size_t i = 0; i < nodes.x.size(); ++i) {
    const Vec3 val = u(nodes.x[i], t);
    const double w = nodes.w[i];
    v.current += (w * nodes.beta[i]) * val;
    v.viscous += (w * nodes.lap[i]) * val;
    v.flux += (w * val.dot(nodes.grad[i])) * val;
  }
  return v;
}

double local_gap(const LocalValues& a, const LocalValues& b) {
  return std::max({(a.current - b.current).lpNorm<Eigen::Infinity>(), (a.viscous - b.viscous).lpNorm<Eigen::Infinity>(),
                   (a.flux - b.flux).lpNorm<Eigen::Infinity>()});
}

double local_mag(const LocalValues& a) {
  return std::max({a.current.lpNorm<Eigen::Infinity>(), a.viscous.lpNorm<Eigen::Infinity>(),
                   a.flux.lpNorm<Eigen::Infinity>()});
}

LocalNodes adapted_nodes(const VectorField& u, const TestBump& beta, double t, double tol) {
  double scale = 1.0;
  LocalNodes nodes = local_nodes(u.traits(), beta, scale);
  for (int it = 0; it < 5; ++it) {
    LocalNodes finer = local_nodes(u.traits(), beta, 1.5 * scale);
    const LocalValues lo = local_values(nodes, u, t), hi = local_values(finer, u, t);
    if (local_gap(lo, hi) <= std::max(tol, 1e-12 * local_mag(hi))) break;
    scale *= 1.5;
    nodes = std::move(finer);
  }
  return nodes;
}

}  // namespace

// ---------------------------------------------------------------- record

double DriftRecord::l1_norm() const {
  double s = 0.0;
  for (std::size_t i = 1; i < phi.size(); ++i) s += 0.5 * times.step() * (phi[i - 1].norm() + phi[i].norm());
  return s;
}

double DriftRecord::sup_phi() const {
  double s = 0.0;
  for (const auto& v : phi) s = std::max(s, v.norm());
  return s;
}

double DriftRecord::sup_Phi() const {
  double s = 0.0;
  for (const auto& v : Phi) s = std::max(s, v.norm());
  return s;
}

namespace {

std::pair<int, double> locate(const TimeGrid& g, double t) {
  if (t < g.t_start - 1e-12 || t > g.t_end + 1e-12) throw Error("drift: time outside the drift grid");
  const double s = (t - g.t_start) / g.step();
  const int i = std::clamp(static_cast<int>(std::floor(s)), 0, g.n - 2);
  return {i, std::clamp(s - i, 0.0, 1.0)};
}

}  // namespace

Vec3 DriftRecord::phi_at(double t) const {
  const auto [i, a] = locate(times, t);
  return (1.0 - a) * phi[i] + a * phi[i + 1];
}

Vec3 DriftRecord::Phi_at(double t) const {
  const auto [i, a] = locate(times, t);
  const double h = times.step() * a;
  return Phi[i] + h * phi[i] + 0.5 * h * a * (phi[i + 1] - phi[i]);
}

std::vector<Vec3> integrate_Phi(const std::vector<double>& t, const std::vector<Vec3>& phi) {
  if (t.size() != phi.size()) throw Error("integrate_Phi: size mismatch");
  std::vector<Vec3> out(phi.size(), Vec3::Zero());
  for (std::size_t i = 1; i < phi.size(); ++i) out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (phi[i - 1] + phi[i]);
  return out;
}

std::vector<Vec3> integrate_Phi(const TimeGrid& times, const std::vector<Vec3>& phi) {
  std::vector<double> t(times.n);
  for (int i = 0; i < times.n; ++i) t[i] = times.at(i);
  return integrate_Phi(t, phi);
}

// ---------------------------------------------------------------- extraction

DriftRecord extract_drift(const VectorField& u, const VectorField& u0, const TestBump& beta, const TimeGrid& times,
                          const DriftOptions& opt, PressurePairing pairing) {
  if (times.t_start != 0.0) throw Error("extract_drift: time grid must start at 0");
  if (times.n < 2) throw Error("extract_drift: need at least two time samples");
  const int n = times.n;

  const LocalNodes nodes = adapted_nodes(u, beta, times.at(n / 2), opt.local_tol);
  const LocalNodes nodes0 = adapted_nodes(u0, beta, 0.0, opt.local_tol);
  const Vec3 initial = local_values(nodes0, u0, 0.0).current;

  std::vector<LocalValues> loc(n);
  std::vector<PairingParts> pres(n);
  if (pairing) {
    parallel_for(n, [&](std::size_t i) {
      loc[i] = local_values(nodes, u, times.at(static_cast<int>(i)));
      pres[i].near = pairing(times.at(static_cast<int>(i)));
      pres[i].converged = true;
    });
  } else {
    PairingEngine engine(momentum_flux(u), beta, opt.far);
    pres[0] = engine(times.at(0));
    loc[0] = local_values(nodes, u, times.at(0));
    parallel_for(n - 1, [&](std::size_t k) {
      const int i = static_cast<int>(k) + 1;
      PairingEngine e = engine;
      pres[i] = e(times.at(i));
      loc[i] = local_values(nodes, u, times.at(i));
    });
  }

  DriftRecord rec;
  rec.times = times;
  rec.phi.resize(n);
  rec.terms.resize(n);
  const double h = times.step();
  DriftTerms acc;
  acc.initial = initial;
  for (int i = 0; i < n; ++i) {
    if (i > 0) {
      acc.viscous += 0.5 * h * opt.nu * (loc[i - 1].viscous + loc[i].viscous);
      acc.flux += 0.5 * h * (loc[i - 1].flux + loc[i].flux);
      acc.pressure += 0.5 * h * (pres[i - 1].total() + pres[i].total());
    }
    acc.current = loc[i].current;
    rec.terms[i] = acc;
    rec.phi[i] = acc.phi();
    rec.pressure_converged = rec.pressure_converged && pres[i].converged;
  }
  rec.Phi = integrate_Phi(times, rec.phi);
  return rec;
}

Vec3 drift_phi(const VectorField& u, const VectorField& u0, const TestBump& beta, double t, const DriftOptions& opt,
               int n) {
  if (!(t > 0.0)) throw Error("drift_phi: t must be positive");
  return extract_drift(u, u0, beta, TimeGrid(0.0, t, n), opt).phi.back();
}

DriftRecord drift_phi_scaled(const VectorField& u, const VectorField& u0, const TestBump& base, double R,
                             const TimeGrid& times, const DriftOptions& opt) {
  if (!(R > 0.0)) throw Error("drift_phi_scaled: R must be positive");
  return extract_drift(u, u0, base.scaled(R), times, opt);
}

// ---------------------------------------------------------------- normalization

VectorField remove_drift(const VectorField& u, const DriftRecord& drift) {
  FieldTraits tr = u.traits();
  tr.generator = "normalized(" + tr.generator + ")";
  tr.steady = false;
  const double sp = drift.sup_phi();
  if (tr.sup_bound) tr.sup_bound = *tr.sup_bound + sp;
  if (sp > 0.0 && tr.decay != DecayClass::BoundedPeriodic) {
    tr.decay = DecayClass::UlocOnly;
    tr.support.reset();
  }
  VectorField v([u, drift](const Vec3& x, double t) { return Vec3(u(x + drift.Phi_at(t), t) - drift.phi_at(t)); },
                tr);
  if (u.jacobian) {
    v.jacobian = [u, drift](const Vec3& x, double t) { return u.jacobian(x + drift.Phi_at(t), t); };
  }
  return v;
}

ScalarField remove_drift(const ScalarField& p, const DriftRecord& drift) {
  FieldTraits tr = p.traits();
  tr.generator = "normalized(" + tr.generator + ")";
  tr.steady = false;
  tr.decay = DecayClass::UlocOnly;
  tr.sup_bound.reset();
  tr.support.reset();
  return ScalarField(
      [p, drift](const Vec3& x, double t) {
        const auto [i, a] = locate(drift.times, t);
        const Vec3 slope = (drift.phi[i + 1] - drift.phi[i]) / drift.times.step();
        return p(x + drift.Phi_at(t), t) + slope.dot(x);
      },
      tr);
}

Normalized normalize(const VectorField& u, const VectorField& u0, const TestBump& beta, const TimeGrid& times,
                     const DriftOptions& opt) {
  DriftRecord rec = extract_drift(u, u0, beta, times, opt);
  VectorField v = remove_drift(u, rec);
  FluxField f = momentum_flux(v);
  return {std::move(v), std::move(f), std::move(rec)};
}

}  // namespace nspg
