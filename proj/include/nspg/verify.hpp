#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nspg/bump.hpp"
#include "nspg/common.hpp"
#include "nspg/fields.hpp"
#include "nspg/kernels.hpp"
#include "nspg/pressure.hpp"

/// Numerical checks of the structural identities: gauge invariance of the
/// expansion under c_i u_j fluxes, harmonicity of p - pbar, the weak form of
/// the equations, attainment of the initial data and the local energy equality.
namespace nspg {

struct Residual {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool ok() const { return std::isfinite(value) && value <= tolerance; }
};

struct CheckReport {
  std::string name;
  std::vector<Residual> residuals;
  std::vector<std::pair<std::string, std::string>> config;
  bool negative_control = false;  // expected to fail
  bool pass() const;
  /// pass() for ordinary checks, !pass() for negative controls.
  bool as_expected() const { return negative_control ? !pass() : pass(); }
  double max_residual() const;
  std::string summary() const;
};

/// Expansion values near + far on one ball at arbitrary points of the ball.
std::vector<double> expansion_at(const FluxField& f, const BallSpec& ball, double t, std::span<const Vec3> pts,
                                 const PointOptions& near = {}, const FarOptions& far = {});
/// The same as a pointwise field; each evaluation reuses one shell plan.
ScalarField expansion_field(const FluxField& f, const BallSpec& ball, const PointOptions& near = {},
                            const FarOptions& far = {});

struct GaugeOptions {
  BallSpec ball{Vec3::Zero(), 1.0};
  double t = 0.5;
  double h = 0.1;            // finite-difference step, checked against h / 2
  double tol = 1e-3;         // relative to |c| sup|u|
  double probe_radius = 0.5;  // probes: centre and +-probe_radius along the axes
  bool allow_nondivergent = false;  // negative controls only
  FarOptions far{1e-7, 14, 1.0};
};

/// Gradient of the expansion of f_ij = c_i u_j on the ball, pointwise (finite
/// differences) and weakly (pairing against d_k beta for bumps in the ball).
CheckReport check_lemma_zero(const Vec3& c, const VectorField& u, const GaugeOptions& opt = {});
/// Same measurement for c_i u_j, u_i c_j and c_i c_j with a time-dependent c.
CheckReport check_cross_terms(std::function<Vec3(double)> c, double sup_c, const VectorField& u,
                              const GaugeOptions& opt = {});

struct HarmonicOptions {
  BallSpec ball{Vec3::Zero(), 1.0};
  double t = 0.5;
  double h = 0.25;
  double probe_radius = 0.4;
  double tol = 1e-6;
  FarOptions far{1e-7, 14, 1.0};
};

/// max |Delta_h (p - pbar)| over probe points, pbar the expansion of u on the ball.
CheckReport check_harmonic(const ScalarField& p, const VectorField& u, const HarmonicOptions& opt = {});

/// psi(x, t) = e_k phi(x) chi(t) for a spatial bump phi and a temporal profile chi.
struct TemporalProfile {
  std::string name;
  std::function<double(double)> chi;
  std::function<double(double)> dchi;
  double lo;  // support of chi inside [0, T]
  double hi;
};
/// Bump supported in (T/4, 3T/4).
TemporalProfile interior_profile(double T);
/// Profile with chi(0) = 1 vanishing smoothly at T.
TemporalProfile initial_profile(double T);

struct TestFunction {
  TestBump space;
  TemporalProfile time;
};

/// Three scales times three seeded centres times both temporal profiles.
std::vector<TestFunction> test_function_library(double T = 1.0, unsigned seed = 7);

struct WeakOptions {
  double nu = 1.0;
  double T = 1.0;
  double tol = 1e-6;  // relative to the sum of absolute term sizes
};

/// Weak-form residual of the Navier-Stokes equations for each test function and component.
CheckReport check_ns_residual(const VectorField& u, const ScalarField& p, const VectorField& u0,
                              const std::vector<TestFunction>& library, const WeakOptions& opt = {});

struct AttainmentOptions {
  double T = 1.0;
  int levels = 5;  // t = T/8, T/16, ...
  std::vector<BallSpec> compacta{BallSpec{Vec3::Zero(), 1.0}, BallSpec{Vec3(2.0, 0.0, 0.0), 1.0}};
  double ratio = 0.25;  // required final/initial gap ratio
};

/// int_K |u(t) - u0| over the compacta as t decreases to 0.
CheckReport check_data_attainment(const VectorField& u, const VectorField& u0, const AttainmentOptions& opt = {});

/// Nonnegative weight phi(x, t) with compact support in B x (t_lo, t_hi).
struct EnergyWeight {
  std::function<double(const Vec3&, double)> value;
  std::function<Vec3(const Vec3&, double)> grad;
  std::function<double(const Vec3&, double)> dt;
  std::function<double(const Vec3&, double)> lap;
  BallSpec support;
  double t_lo;
  double t_hi;
};
/// amplitude * beta(x) * bump in t on (t_lo, t_hi); a negative amplitude exercises the refusal.
EnergyWeight make_energy_weight(const TestBump& space, double t_lo, double t_hi, double amplitude = 1.0);

struct EnergyOptions {
  double nu = 1.0;
  double tol = 1e-5;
};

/// 2 nu int int |grad u|^2 phi against int int |u|^2 (phi_t + nu Lap phi) + (|u|^2 + 2p) u . grad phi.
struct EnergyBalance {
  double lhs = 0.0;
  double rhs = 0.0;
  double defect() const { return rhs - lhs; }
};
EnergyBalance local_energy_balance(const VectorField& u, const ScalarField& p, const EnergyWeight& w,
                                   const EnergyOptions& opt = {});
CheckReport check_local_energy_equality(const VectorField& u, const ScalarField& p, const EnergyWeight& w,
                                        const EnergyOptions& opt = {});

}  // namespace nspg
