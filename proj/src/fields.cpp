#include "nspg/fields.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "nspg/bump.hpp"
#include "nspg/geometry.hpp"

namespace nspg {

std::string to_string(DecayClass d) {
  switch (d) {
    case DecayClass::CompactSupport: return "compact-support";
    case DecayClass::Gaussian: return "gaussian";
    case DecayClass::BoundedPeriodic: return "bounded-periodic";
    case DecayClass::UlocOnly: return "uloc-only";
  }
  return "uloc-only";
}

DecayClass decay_class_from_string(const std::string& s) {
  if (s == "compact-support") return DecayClass::CompactSupport;
  if (s == "gaussian") return DecayClass::Gaussian;
  if (s == "bounded-periodic") return DecayClass::BoundedPeriodic;
  if (s == "uloc-only") return DecayClass::UlocOnly;
  throw Error("unknown decay class '" + s + "'");
}

namespace {

double fd_step(const FieldTraits& tr) { return 1e-3 * std::min(1.0, tr.length_scale); }

template <class F>
auto fd4(F&& f, double d) {
  return (-f(2.0 * d) + 8.0 * f(d) - 8.0 * f(-d) + f(-2.0 * d)) / (12.0 * d);
}

}  // namespace

template <class V>
AnalyticField<V>::AnalyticField(Eval f, FieldTraits traits) : f_(std::move(f)), traits_(std::move(traits)) {
  if (!f_) throw Error("AnalyticField: empty evaluator");
  if (!(traits_.length_scale > 0.0)) throw Error("AnalyticField: length scale must be positive");
  if constexpr (std::is_same_v<V, Vec3>) {
    if (traits_.divergence_free) {
      const double div = max_divergence_sample(*this);
      const double scale = std::max(1.0, traits_.sup_bound.value_or(1.0) / traits_.length_scale);
      if (!(div < 1e-8 * scale)) {
        std::ostringstream os;
        os << "AnalyticField '" << traits_.generator << "' declared divergence-free but max |div u| = " << div;
        throw Error(os.str());
      }
    }
  }
}

template class AnalyticField<Vec3>;
template class AnalyticField<double>;

Grid3::Grid3(const Vec3& o, double spacing, std::array<int, 3> counts) : origin(o), h(spacing), n(counts) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw Error("Grid3: spacing must be positive and finite");
  for (int c : counts)
    if (c < 2) throw Error("Grid3: need at least 2 nodes per direction");
  if (!o.allFinite()) throw Error("Grid3: origin must be finite");
}

TimeGrid::TimeGrid(double t0, double t1, int count) : t_start(t0), t_end(t1), n(count) {
  if (count < 1) throw Error("TimeGrid: need at least one sample");
  if (!(t0 >= 0.0)) throw Error("TimeGrid: need t_start >= 0");
  if (count == 1 ? t1 != t0 : !(t1 > t0)) throw Error("TimeGrid: need t_start < t_end (equal for one sample)");
}

double SampledField::interpolate(const Vec3& x, int it, int c) const {
  double f[3];
  int i0[3];
  for (int a = 0; a < 3; ++a) {
    const double s = (x[a] - grid.origin[a]) / grid.h;
    if (s < -1e-12 || s > grid.n[a] - 1 + 1e-12) throw Error("SampledField::interpolate: point outside grid");
    i0[a] = std::clamp(static_cast<int>(std::floor(s)), 0, grid.n[a] - 2);
    f[a] = s - i0[a];
  }
  double v = 0.0;
  for (int dk = 0; dk < 2; ++dk)
    for (int dj = 0; dj < 2; ++dj)
      for (int di = 0; di < 2; ++di) {
        const double w = (di ? f[0] : 1 - f[0]) * (dj ? f[1] : 1 - f[1]) * (dk ? f[2] : 1 - f[2]);
        v += w * at(it, i0[0] + di, i0[1] + dj, i0[2] + dk, c);
      }
  return v;
}

namespace {

template <class Field>
SampledField sample_impl(const Field& f, const Grid3& grid, const TimeGrid& times, int rank) {
  SampledField out{grid, times, rank, {}};
  out.values.resize(grid.size() * times.n * rank);
  for (int it = 0; it < times.n; ++it) {
    const double t = times.at(it);
    for (int k = 0; k < grid.n[2]; ++k)
      for (int j = 0; j < grid.n[1]; ++j)
        for (int i = 0; i < grid.n[0]; ++i) {
          const Vec3 x = grid.node(i, j, k);
          const auto v = f(x, t);
          for (int c = 0; c < rank; ++c) {
            double val;
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, double>) {
              val = v;
            } else {
              val = v[c];
            }
            if (!std::isfinite(val)) {
              std::ostringstream os;
              os << "sample: non-finite value at x = (" << x[0] << ", " << x[1] << ", " << x[2] << "), t = " << t;
              throw Error(os.str());
            }
            out.values[out.index(it, i, j, k, c)] = val;
          }
        }
  }
  return out;
}

}  // namespace

SampledField sample(const VectorField& u, const Grid3& grid, const TimeGrid& times) {
  return sample_impl(u, grid, times, 3);
}

SampledField sample(const ScalarField& p, const Grid3& grid, const TimeGrid& times) {
  return sample_impl(p, grid, times, 1);
}

void DriftSpec::validate(double t_end) const {
  if (!phi || !dphi || !Phi) throw Error("DriftSpec: phi, dphi and Phi are all required");
  if (Phi(0.0).norm() > 1e-12) throw Error("DriftSpec: Phi(0) must vanish");
  const double d = 1e-3 * std::max(t_end, 1e-3);
  for (int i = 0; i <= 16; ++i) {
    const double t = t_end * i / 16.0;
    const Vec3 dPhi = fd4([&](double s) { return Vec3(Phi(t + s)); }, d);
    const Vec3 ddphi = fd4([&](double s) { return Vec3(phi(t + s)); }, d);
    const double scale = 1.0 + phi(t).norm() + dphi(t).norm();
    if ((dPhi - phi(t)).norm() > 1e-7 * scale) {
      throw Error("DriftSpec: Phi' does not match phi at t = " + std::to_string(t));
    }
    if ((ddphi - dphi(t)).norm() > 1e-7 * scale) {
      throw Error("DriftSpec: phi' does not match d phi / dt at t = " + std::to_string(t));
    }
  }
}

DriftSpec make_sinusoidal_drift(const Vec3& amplitude, double omega) {
  if (!(omega > 0.0)) throw Error("make_sinusoidal_drift: omega must be positive");
  DriftSpec d;
  d.phi = [=](double t) { return Vec3(amplitude * std::sin(omega * t)); };
  d.dphi = [=](double t) { return Vec3(amplitude * omega * std::cos(omega * t)); };
  d.Phi = [=](double t) { return Vec3(amplitude * (1.0 - std::cos(omega * t)) / omega); };
  d.sup_phi = amplitude.norm();
  return d;
}

FieldPair make_taylor_green(double nu) {
  if (!(nu > 0.0)) throw Error("make_taylor_green: viscosity must be positive");
  FieldTraits tu;
  tu.generator = "taylor-green";
  tu.params = {{"nu", nu}};
  tu.decay = DecayClass::BoundedPeriodic;
  tu.divergence_free = true;
  tu.sup_bound = 1.0;
  tu.wavenumber = std::sqrt(2.0);
  tu.length_scale = 1.0;
  tu.period = 2.0 * kPi;
  tu.hot_spots = {Vec3::Zero()};
  VectorField u(
      [nu](const Vec3& x, double t) {
        const double e = std::exp(-2.0 * nu * t);
        return Vec3(e * std::cos(x[0]) * std::sin(x[1]), -e * std::sin(x[0]) * std::cos(x[1]), 0.0);
      },
      tu);
  u.jacobian = [nu](const Vec3& x, double t) {
    const double e = std::exp(-2.0 * nu * t);
    const double c1 = std::cos(x[0]), s1 = std::sin(x[0]), c2 = std::cos(x[1]), s2 = std::sin(x[1]);
    Mat3 J = Mat3::Zero();
    J(0, 0) = -e * s1 * s2;
    J(0, 1) = e * c1 * c2;
    J(1, 0) = -e * c1 * c2;
    J(1, 1) = e * s1 * s2;
    return J;
  };
  FieldTraits tp = tu;
  tp.divergence_free = false;
  tp.sup_bound = 0.5;
  tp.wavenumber = 2.0;
  ScalarField p(
      [nu](const Vec3& x, double t) {
        return -0.25 * std::exp(-4.0 * nu * t) * (std::cos(2.0 * x[0]) + std::cos(2.0 * x[1]));
      },
      tp);
  return {u, p};
}

VectorField make_gaussian_vortex(double amplitude, double width, const Vec3& center) {
  if (!(width > 0.0)) throw Error("make_gaussian_vortex: width must be positive");
  const double s2 = width * width;
  FieldTraits tr;
  tr.generator = "gaussian-vortex";
  tr.steady = true;
  tr.params = {{"amplitude", amplitude}, {"width", width}, {"cx", center[0]}, {"cy", center[1]}, {"cz", center[2]}};
  tr.decay = DecayClass::Gaussian;
  tr.divergence_free = true;
  tr.sup_bound = std::sqrt(2.0) * std::abs(amplitude) * std::exp(-0.5) / width;
  tr.length_scale = width;
  tr.support = SupportBall{center, 6.0 * width};
  tr.hot_spots = {center};
  VectorField u(
      [=](const Vec3& x, double) {
        const Vec3 y = x - center;
        const double psi = amplitude * std::exp(-y.squaredNorm() / s2);
        return Vec3(-2.0 * y[1] * psi / s2, 2.0 * y[0] * psi / s2, 0.0);
      },
      tr);
  u.jacobian = [=](const Vec3& x, double) {
    const Vec3 y = x - center;
    const double psi = amplitude * std::exp(-y.squaredNorm() / s2);
    const Vec3 dpsi = -2.0 * y * psi / s2;
    Mat3 J = Mat3::Zero();
    J.row(0) = -2.0 / s2 * (y[1] * dpsi).transpose();
    J(0, 1) += -2.0 / s2 * psi;
    J.row(1) = 2.0 / s2 * (y[0] * dpsi).transpose();
    J(1, 0) += 2.0 / s2 * psi;
    return J;
  };
  return u;
}

FieldPair inject_drift(const FieldPair& up, const DriftSpec& drift, double t_end) {
  drift.validate(t_end);
  FieldTraits tu = up.u.traits();
  tu.generator += "+drift";
  tu.steady = false;
  if (tu.sup_bound) tu.sup_bound = *tu.sup_bound + drift.sup_phi;
  if (tu.decay != DecayClass::BoundedPeriodic) tu.decay = DecayClass::UlocOnly;
  tu.support.reset();
  const VectorField base_u = up.u;
  const ScalarField base_p = up.p;
  VectorField u(
      [base_u, drift](const Vec3& x, double t) { return Vec3(base_u(x - drift.Phi(t), t) + drift.phi(t)); }, tu);
  if (base_u.jacobian) {
    u.jacobian = [base_u, drift](const Vec3& x, double t) { return base_u.jacobian(x - drift.Phi(t), t); };
  }
  FieldTraits tp = up.p.traits();
  tp.generator += "+drift";
  tp.steady = false;
  tp.decay = DecayClass::UlocOnly;
  tp.sup_bound.reset();
  tp.period.reset();
  ScalarField p(
      [base_p, drift](const Vec3& x, double t) { return base_p(x - drift.Phi(t), t) - drift.dphi(t).dot(x); }, tp);
  return {u, p};
}

VectorField make_constant_field(const Vec3& c) {
  FieldTraits tr;
  tr.generator = "constant";
  tr.steady = true;
  tr.params = {{"cx", c[0]}, {"cy", c[1]}, {"cz", c[2]}};
  tr.decay = DecayClass::BoundedPeriodic;
  tr.divergence_free = true;
  tr.sup_bound = c.norm();
  tr.period = 2.0 * kPi;
  return VectorField([c](const Vec3&, double) { return c; }, tr);
}

VectorField make_nondivergent_control(double radius) {
  const TestBump beta(Vec3::Zero(), radius, 1.0);
  FieldTraits tr;
  tr.generator = "nondivergent-control";
  tr.steady = true;
  tr.params = {{"radius", radius}};
  tr.decay = DecayClass::CompactSupport;
  tr.divergence_free = false;
  tr.sup_bound = radius * beta.profile(0.0);
  tr.length_scale = radius / 4.0;
  tr.support = SupportBall{Vec3::Zero(), radius};
  return VectorField([beta](const Vec3& x, double) { return Vec3(x[0] * beta.value(x), 0.0, 0.0); }, tr);
}

ScalarField make_cylinder_indicator() {
  FieldTraits tr;
  tr.generator = "cylinder";
  tr.steady = true;
  tr.decay = DecayClass::UlocOnly;
  tr.sup_bound = 1.0;
  tr.length_scale = 1.0;
  tr.hot_spots = {Vec3::Zero()};
  ScalarField f([](const Vec3& x, double) { return x[1] * x[1] + x[2] * x[2] < 1.0 ? 1.0 : 0.0; }, tr);
  f.ball_integral_sq = [](const Vec3& x0, double R, double) { return ball_cylinder_volume(x0, R, 1.0); };
  return f;
}

ScalarField make_dyadic_balls(int k_max) {
  if (k_max < 1 || k_max > 60) throw Error("make_dyadic_balls: k_max must be in 1..60");
  FieldTraits tr;
  tr.generator = "dyadic-balls";
  tr.steady = true;
  tr.params = {{"k_max", static_cast<double>(k_max)}};
  tr.decay = DecayClass::CompactSupport;
  tr.sup_bound = 2.0;
  tr.length_scale = 1.0;
  tr.truncation_radius = std::ldexp(1.0, k_max) + k_max;
  tr.support = SupportBall{Vec3::Zero(), tr.truncation_radius};
  tr.hot_spots.push_back(Vec3::Zero());
  for (int k = 1; k <= k_max; ++k) tr.hot_spots.emplace_back(std::ldexp(1.0, k), 0.0, 0.0);
  ScalarField f(
      [k_max](const Vec3& x, double) {
        double v = 0.0;
        for (int k = 1; k <= k_max; ++k) {
          const Vec3 c(std::ldexp(1.0, k), 0.0, 0.0);
          if ((x - c).squaredNorm() < static_cast<double>(k) * k) v += 1.0;
        }
        return v;
      },
      tr);
  f.ball_integral_sq = [k_max](const Vec3& x0, double R, double) { return ball_dyadic_integral_sq(x0, R, k_max); };
  return f;
}

Mat3 jacobian(const VectorField& u, const Vec3& x, double t) {
  if (u.jacobian) return u.jacobian(x, t);
  const double d = fd_step(u.traits());
  Mat3 J;
  for (int j = 0; j < 3; ++j) {
    J.col(j) = fd4([&](double s) { return Vec3(u(x + s * Vec3::Unit(j), t)); }, d);
  }
  return J;
}

double divergence(const VectorField& u, const Vec3& x, double t) { return jacobian(u, x, t).trace(); }

Vec3 gradient(const ScalarField& p, const Vec3& x, double t, double step) {
  const double d = step > 0.0 ? step : fd_step(p.traits());
  Vec3 g;
  for (int j = 0; j < 3; ++j) g[j] = fd4([&](double s) { return p(x + s * Vec3::Unit(j), t); }, d);
  return g;
}

Vec3 time_derivative(const VectorField& u, const Vec3& x, double t, double dt) {
  return fd4([&](double s) { return Vec3(u(x, t + s)); }, dt);
}

double max_divergence_sample(const VectorField& u, int count) {
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), time(0.0, 1.0);
  const auto& tr = u.traits();
  const Vec3 c = tr.support ? tr.support->center : Vec3::Zero();
  const double r = tr.support ? tr.support->radius / 2.0 : 4.0;
  const double d = fd_step(tr);
  double m = 0.0;
  for (int n = 0; n < count; ++n) {
    const Vec3 x = c + r * Vec3(unit(rng), unit(rng), unit(rng));
    const double t = time(rng);
    double div = 0.0;
    for (int j = 0; j < 3; ++j) div += fd4([&](double s) { return u(x + s * Vec3::Unit(j), t)[j]; }, d);
    m = std::max(m, std::abs(div));
  }
  return m;
}

}  // namespace nspg
