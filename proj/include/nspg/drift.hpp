#pragma once

#include <functional>
#include <vector>

#include "nspg/bump.hpp"
#include "nspg/common.hpp"
#include "nspg/fields.hpp"
#include "nspg/pressure.hpp"

/// The drift functional
///   phi(t) = int u(t) beta - int u0 beta - nu int_0^t int u Lap beta
///            - int_0^t int u_k u_j d_j beta - int_0^t <pbar, d_k beta>,
/// its primitive Phi and the inverse transgalilean map that removes it.
///
/// For a weak solution phi' = -d_k (p - pbar): a parasitic field
/// u(x - Phi*(t), t) + phi*(t) returns phi = phi*.
namespace nspg {

/// Cumulative contributions at one time; phi = current - initial - viscous - flux - pressure.
struct DriftTerms {
  Vec3 current = Vec3::Zero();
  Vec3 initial = Vec3::Zero();
  Vec3 viscous = Vec3::Zero();
  Vec3 flux = Vec3::Zero();
  Vec3 pressure = Vec3::Zero();
  Vec3 phi() const { return current - initial - viscous - flux - pressure; }
};

struct DriftRecord {
  TimeGrid times;
  std::vector<Vec3> phi;
  std::vector<Vec3> Phi;
  std::vector<DriftTerms> terms;
  bool pressure_converged = true;

  /// Trapezoid int_0^T |phi|.
  double l1_norm() const;
  double sup_phi() const;
  double sup_Phi() const;
  /// Piecewise-linear phi(t) and its exact primitive.
  Vec3 phi_at(double t) const;
  Vec3 Phi_at(double t) const;
};

struct DriftOptions {
  double nu = 1.0;
  FarOptions far{1e-7, 14, 1.0};
  double local_tol = 1e-10;  // accepted change of the local integrals under order refinement
};

/// Pairing <pbar, d_k beta> at time t.
using PressurePairing = std::function<Vec3(double)>;

/// Drift on a time grid starting at 0. u0 is evaluated at t = 0. The pressure
/// term uses the constructed expansion of u unless a pairing is supplied.
DriftRecord extract_drift(const VectorField& u, const VectorField& u0, const TestBump& beta, const TimeGrid& times,
                          const DriftOptions& opt = {}, PressurePairing pairing = {});

/// phi(t) from a uniform grid of n samples on [0, t].
Vec3 drift_phi(const VectorField& u, const VectorField& u0, const TestBump& beta, double t,
               const DriftOptions& opt = {}, int n = 64);

/// Same functional with beta_R = R^-3 beta(./R).
DriftRecord drift_phi_scaled(const VectorField& u, const VectorField& u0, const TestBump& base, double R,
                             const TimeGrid& times, const DriftOptions& opt = {});

/// Cumulative trapezoid, Phi[0] = 0.
std::vector<Vec3> integrate_Phi(const std::vector<double>& t, const std::vector<Vec3>& phi);
std::vector<Vec3> integrate_Phi(const TimeGrid& times, const std::vector<Vec3>& phi);

/// v(x, t) = u(x + Phi(t), t) - phi(t) with phi, Phi from the record.
VectorField remove_drift(const VectorField& u, const DriftRecord& drift);
/// p(x + Phi(t), t) + phi'(t) . x with phi' the slope of the piecewise-linear drift.
ScalarField remove_drift(const ScalarField& p, const DriftRecord& drift);

struct Normalized {
  VectorField u;
  FluxField flux;  // u_i u_j of the normalized field, the source of its expansion
  DriftRecord drift;
};

/// Extracts the drift of u and removes it.
Normalized normalize(const VectorField& u, const VectorField& u0, const TestBump& beta, const TimeGrid& times,
                     const DriftOptions& opt = {});

}  // namespace nspg
