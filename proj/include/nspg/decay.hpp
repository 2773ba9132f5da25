#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nspg/common.hpp"
#include "nspg/fields.hpp"

/// Space-time decay conditions on int int |u|^2:
///   A: int_0^{R^2} int_{B_R(x0)} |u|^2 -> 0 as |x0| -> oo (R fixed),
///   B: sup_x0 R^-3 int_0^T int_{B_R(x0)} |u|^2 -> 0 as R -> oo,
///   C: R^-3 int_0^T int_{B_R(0)} |u|^2 -> 0 as R -> oo,
/// and the data condition R^-3 int_{B_R(0)} |u0| -> 0.
namespace nspg {

enum class Verdict { Vanishes, Persists, Inconclusive };
std::string to_string(Verdict v);

struct SweepPoint {
  double param;  // R, |x0| or k
  double value;
};

struct ScalingFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS deviation in log(value)
};

/// Least-squares slope of log(value) against log(param). Refuses fewer than
/// three points or a nonpositive value.
ScalingFit scaling_fit(std::span<const SweepPoint> sweep);

/// vanishes: fitted exponent < -0.5 with residual < 0.1, or every local slope
/// below -0.5 and steepening (faster than any power), or values reaching 0
/// monotonically. persists: fitted exponent > -0.1 and the last value at least
/// a quarter of the largest. Anything else is inconclusive.
Verdict classify(std::span<const SweepPoint> sweep);

struct DecayReport {
  std::string condition;  // A, B, C or data-A0
  std::string field;
  std::vector<SweepPoint> sweep;
  std::optional<ScalingFit> fit;
  Verdict verdict = Verdict::Inconclusive;
  bool lower_bound = false;  // B: the sup is taken over a finite candidate set
  bool time_clipped = false;  // A: R^2 > T, integrated to T only
  std::string summary() const;
};

/// int_{B_R(x0)} |f(., t)|^2: exact hook when the field has one, otherwise
/// spherical product quadrature resolved from the field traits.
double ball_integral_sq(const VectorField& u, const Vec3& x0, double R, double t);
double ball_integral_sq(const ScalarField& u, const Vec3& x0, double R, double t);
/// int_0^T of the above (Gauss-Legendre in time).
double space_time_integral_sq(const VectorField& u, const Vec3& x0, double R, double T);
double space_time_integral_sq(const ScalarField& u, const Vec3& x0, double R, double T);

struct CondAValue {
  double value;
  bool time_clipped;
};
CondAValue cond_A_estimator(const VectorField& u, const Vec3& x0, double R, double T);
CondAValue cond_A_estimator(const ScalarField& u, const Vec3& x0, double R, double T);

/// Origin, the field's hot spots, and points at distances R/2, R, 2R, ... along
/// the six half-axes, stopping at the truncation radius (or 16 R).
std::vector<Vec3> cond_B_candidates(const FieldTraits& tr, double R);

struct CondBValue {
  double value;  // lower bound for the sup over x0
  Vec3 argmax;
};
CondBValue cond_B_estimator(const VectorField& u, double R, double T, std::span<const Vec3> candidates = {});
CondBValue cond_B_estimator(const ScalarField& u, double R, double T, std::span<const Vec3> candidates = {});

double cond_C_estimator(const VectorField& u, double R, double T);
double cond_C_estimator(const ScalarField& u, double R, double T);

/// R^-3 int_{B_R(0)} |u0(., 0)|.
double data_decay_estimator(const VectorField& u0, double R);

/// Sweeps over increasing parameters; report verdicts use classify.
DecayReport cond_A_sweep(const VectorField& u, std::span<const double> distances, double R, double T,
                         const Vec3& direction = Vec3::UnitX());
DecayReport cond_A_sweep(const ScalarField& u, std::span<const double> distances, double R, double T,
                         const Vec3& direction = Vec3::UnitX());
DecayReport cond_B_sweep(const VectorField& u, std::span<const double> radii, double T);
DecayReport cond_B_sweep(const ScalarField& u, std::span<const double> radii, double T);
DecayReport cond_C_sweep(const VectorField& u, std::span<const double> radii, double T);
DecayReport cond_C_sweep(const ScalarField& u, std::span<const double> radii, double T);
DecayReport data_sweep(const VectorField& u0, std::span<const double> radii);

/// Dyadic balls: B at (R, x0) = (k, (2^k, 0, 0)) for the given k.
DecayReport dyadic_cond_B_sweep(int k_max, std::span<const int> ks, double T);

struct ImplicationRow {
  std::string field;
  DecayReport A;
  DecayReport B;
  DecayReport C;
};

struct ImplicationBullet {
  std::string statement;  // e.g. "A => B"
  std::string witness;
  bool holds = false;
};

struct ImplicationMatrix {
  std::vector<ImplicationRow> rows;
  std::vector<ImplicationBullet> bullets;
  bool all_hold() const;
};

/// Cylinder, dyadic balls and a Gaussian control, checked against
/// A => B, B => C, B does not imply A (cylinder), C does not imply B (dyadic balls).
ImplicationMatrix implication_matrix(double T = 1.0);

}  // namespace nspg
