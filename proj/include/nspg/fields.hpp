#pragma once

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nspg/common.hpp"

namespace nspg {

enum class DecayClass { CompactSupport, Gaussian, BoundedPeriodic, UlocOnly };

std::string to_string(DecayClass d);
DecayClass decay_class_from_string(const std::string& s);

struct SupportBall {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

/// Metadata carried by every analytic field. Numerical routines use it to size
/// windows and quadrature; anything missing makes the dependent routine refuse.
struct FieldTraits {
  std::string generator;
  std::vector<std::pair<std::string, double>> params;
  DecayClass decay = DecayClass::UlocOnly;
  bool divergence_free = false;
  bool steady = false;                  // no time dependence
  std::optional<double> sup_bound;      // bound on |value| over space and time
  double wavenumber = 0.0;              // largest spatial frequency, 0 if not oscillatory
  double length_scale = 1.0;            // smallest feature size
  std::optional<SupportBall> support;   // values vanish to double precision outside
  std::optional<double> period;         // common period in every direction
  std::vector<Vec3> hot_spots;          // candidate centres for sup-type estimators
  double truncation_radius = std::numeric_limits<double>::infinity();
};

template <class V>
class AnalyticField {
 public:
  using Eval = std::function<V(const Vec3&, double)>;

  AnalyticField(Eval f, FieldTraits traits);

  V operator()(const Vec3& x, double t) const { return f_(x, t); }
  const FieldTraits& traits() const { return traits_; }
  FieldTraits& traits() { return traits_; }

  /// Optional analytic Jacobian (vector fields), entry (i, j) = d_j u_i.
  std::function<Mat3(const Vec3&, double)> jacobian;
  /// Optional exact value of the integral of |f|^2 over B_R(x0) at time t.
  std::function<double(const Vec3&, double, double)> ball_integral_sq;

 private:
  Eval f_;
  FieldTraits traits_;
};

using VectorField = AnalyticField<Vec3>;
using ScalarField = AnalyticField<double>;

struct FieldPair {
  VectorField u;
  ScalarField p;
};

/// Uniform spatial lattice origin + h * (i, j, k), 0 <= i < n[0] etc. n counts nodes.
struct Grid3 {
  Vec3 origin = Vec3::Zero();
  double h = 1.0;
  std::array<int, 3> n{2, 2, 2};

  Grid3() = default;
  Grid3(const Vec3& o, double spacing, std::array<int, 3> counts);
  Vec3 node(int i, int j, int k) const { return origin + h * Vec3(i, j, k); }
  std::size_t size() const { return static_cast<std::size_t>(n[0]) * n[1] * n[2]; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * n[1] + j) * n[0] + i;
  }
};

struct TimeGrid {
  double t_start = 0.0;
  double t_end = 1.0;
  int n = 2;

  TimeGrid() = default;
  TimeGrid(double t0, double t1, int count);
  double step() const { return n > 1 ? (t_end - t_start) / (n - 1) : 0.0; }
  double at(int i) const { return t_start + i * step(); }
};

/// Field values on Grid3 x TimeGrid. Layout: time slowest, then x3, x2, x1,
/// component fastest.
struct SampledField {
  Grid3 grid;
  TimeGrid times;
  int rank = 1;
  std::vector<double> values;

  std::size_t index(int it, int i, int j, int k, int c = 0) const {
    return ((static_cast<std::size_t>(it) * grid.size()) + grid.index(i, j, k)) * rank + c;
  }
  double at(int it, int i, int j, int k, int c = 0) const { return values[index(it, i, j, k, c)]; }
  /// Trilinear interpolation of component c at time index it. Throws outside the grid.
  double interpolate(const Vec3& x, int it, int c = 0) const;
};

SampledField sample(const VectorField& u, const Grid3& grid, const TimeGrid& times);
SampledField sample(const ScalarField& p, const Grid3& grid, const TimeGrid& times);

/// Drift phi(t), its derivative and primitive Phi(t) = int_0^t phi.
struct DriftSpec {
  std::function<Vec3(double)> phi;
  std::function<Vec3(double)> dphi;
  std::function<Vec3(double)> Phi;
  double sup_phi = 0.0;

  /// Throws if Phi' != phi or phi' != d phi / dt at sample times in [0, t_end].
  void validate(double t_end) const;
};

DriftSpec make_sinusoidal_drift(const Vec3& amplitude, double omega = 1.0);

FieldPair make_taylor_green(double nu);
VectorField make_gaussian_vortex(double amplitude, double width, const Vec3& center = Vec3::Zero());
/// (u(x - Phi(t), t) + phi(t), p(x - Phi(t), t) - phi'(t) . x). Validates the drift first.
FieldPair inject_drift(const FieldPair& up, const DriftSpec& drift, double t_end = 1.0);
VectorField make_constant_field(const Vec3& c);
/// (x1 beta(x), 0, 0) with beta the unit mollifier on B_radius: compactly supported, not solenoidal.
VectorField make_nondivergent_control(double radius = 1.5);
/// Indicator of the infinite cylinder of radius 1 around the x1 axis.
ScalarField make_cylinder_indicator();
/// Sum over k = 1..k_max of indicators of B_k((2^k, 0, 0)).
ScalarField make_dyadic_balls(int k_max = 12);

/// Derivatives by fourth-order centred differences unless an analytic hook exists.
Mat3 jacobian(const VectorField& u, const Vec3& x, double t);
double divergence(const VectorField& u, const Vec3& x, double t);
Vec3 gradient(const ScalarField& p, const Vec3& x, double t, double step = 0.0);
Vec3 time_derivative(const VectorField& u, const Vec3& x, double t, double dt = 1e-3);

/// Largest |div u| over fixed-seed random points, used by the construction check.
double max_divergence_sample(const VectorField& u, int count = 64);

}  // namespace nspg
