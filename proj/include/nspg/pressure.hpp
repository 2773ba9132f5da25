#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "nspg/bump.hpp"
#include "nspg/common.hpp"
#include "nspg/fields.hpp"
#include "nspg/kernels.hpp"

/// Pressure from the quadratic term: double Riesz transforms, the local
/// near/far expansion on a ball, glue constants and the global expansion.
///
/// Sign convention: R_i R_j has Fourier multiplier -xi_i xi_j / |xi|^2, so
/// sum_i R_i R_i = -Id and R_i R_j (Laplacian psi) = -d_i d_j psi.
namespace nspg {

inline constexpr int kRieszLaplacianSign = -1;

/// Matrix-valued source f_ij(y, t). traits.sup_bound bounds sum_ij |f_ij|.
struct FluxField {
  std::function<Mat3(const Vec3&, double)> eval;
  FieldTraits traits;
  Mat3 operator()(const Vec3& x, double t) const { return eval(x, t); }
};

/// u_i u_j.
FluxField momentum_flux(const VectorField& u);
/// c_i(t) u_j; sup_c bounds |c(t)|.
FluxField outer_flux(std::function<Vec3(double)> c, double sup_c, const VectorField& u);
/// c_i u_j + u_i c_j + c_i c_j.
FluxField drift_cross_flux(std::function<Vec3(double)> c, double sup_c, const VectorField& u);

enum class ZeroMode {
  FreeSpace,  // -delta_ij / 3, the whole-space value of R_i R_j at xi = 0
  Periodic,   // 0, mean-zero periodic pressure
};

struct RieszTerm {
  int i;
  int j;
  double weight;
  std::span<const double> data;  // Grid3 layout, x1 fastest
};

/// sum over terms of weight * R_i R_j data on an n-node lattice with spacing h.
/// padding > 1 zero-pads to padding * n per direction (free space); padding = 1
/// treats the lattice as one period. With padding > 1 data must vanish on the
/// outer node layer, otherwise the call refuses.
std::vector<double> riesz_apply(const std::array<int, 3>& n, double h, std::span<const RieszTerm> terms,
                                int padding = 2, ZeroMode zero = ZeroMode::FreeSpace);

/// Single pair R_i R_j f (0-based indices).
std::vector<double> riesz_pair_apply(const Grid3& grid, std::span<const double> f, int i, int j, int padding = 2,
                                     ZeroMode zero = ZeroMode::FreeSpace);

/// Values on the lattice cube covering a ball; inside marks nodes in the open ball.
struct BallGridValues {
  Grid3 grid;
  std::vector<double> values;
  std::vector<unsigned char> inside;
};

/// Lattice nodes h Z^3 covering [x0 - R, x0 + R]^3.
Grid3 ball_lattice(const BallSpec& ball, double h);

struct NearOptions {
  double h = 0.0;  // 0: min(R / 8, flux length scale / 2)
  int padding = 2;
};

/// R_i R_j (f_ij theta_R(x0 - .)) on the ball lattice by zero-padded FFT.
BallGridValues near_pressure(const FluxField& f, const BallSpec& ball, double t, const NearOptions& opt = {});

struct PointOptions {
  double order_scale = 1.0;
  double tol = 1e-9;  // accepted change between the base and refined rules
};

/// Same quantity at arbitrary points by principal-value quadrature centred at
/// each point (mean-zero kernel removes the singularity).
std::vector<double> near_pressure_at(const FluxField& f, const BallSpec& ball, double t, std::span<const Vec3> pts,
                                     const PointOptions& opt = {});

struct FarOptions {
  double tol = 1e-6;
  int max_shells = 14;
  double order_scale = 1.0;
};

/// Quadrature orders fixed by the first adaptive call; reused afterwards.
struct ShellPlan {
  std::vector<double> scale;  // order multiplier per shell
  int shells = 0;
  bool converged = false;
  bool empty() const { return shells == 0; }
};

struct FarResult {
  std::vector<double> values;
  double tail_bound = 0.0;       // bound on the neglected region beyond the last shell
  double last_shell = 0.0;       // largest |contribution| of the last shell used
  double shell_bound = 0.0;      // explicit bound on |far| over the ball
  int shells = 0;
  bool converged = false;
  bool tail_within_tol = false;
};

/// int (K(x - y) - K(x0 - y)) (1 - theta_R(x0 - y)) f_ij(y) dy at x in the
/// ball, summed over smooth dyadic shells around x0.
FarResult far_pressure(const FluxField& f, const BallSpec& ball, double t, std::span<const Vec3> pts,
                       const FarOptions& opt = {}, ShellPlan* plan = nullptr);

/// Explicit bound on |far| over B_R(x0) from the shell decomposition: 192 sup sum_ij |f_ij|.
double far_shell_bound(const FluxField& f);

struct PressureExpansion {
  BallSpec ball;
  double t = 0.0;
  Grid3 grid;
  std::vector<unsigned char> inside;
  std::vector<double> near;
  std::vector<double> far;
  double mean = 0.0;  // mean of near + far over inside nodes
  double far_tail_bound = 0.0;
  bool far_converged = false;

  /// near + far - mean: the expansion with its additive gauge fixed.
  double value(std::size_t idx) const { return near[idx] + far[idx] - mean; }
  double raw(std::size_t idx) const { return near[idx] + far[idx]; }
};

PressureExpansion local_expansion(const FluxField& f, const BallSpec& ball, double t, const NearOptions& near = {},
                                  const FarOptions& far = {});

/// c_k(t) = -int K_ij(-y) (theta_k - theta_{k-1})(-y) f_ij(y) dy for k >= 2.
double glue_constant(const FluxField& f, int k, double t, double tol = 1e-10);
/// Entries 2..n hold c_2..c_n; entries 0 and 1 are zero.
std::vector<double> glue_constants(const FluxField& f, int n, double t, double tol = 1e-10);

struct GlobalOptions {
  int n = 0;  // 0: smallest n with |x| < n for every point
  PointOptions near;
  FarOptions far;
};

/// Global expansion at points: local expansion on B_n(0) plus c_2 + ... + c_n.
std::vector<double> global_expansion_at(const FluxField& f, std::span<const Vec3> pts, double t,
                                        const GlobalOptions& opt = {});
double global_expansion(const FluxField& f, const Vec3& x, double t, const GlobalOptions& opt = {});

/// Classical pressure R_i R_j f_ij on a grid. Periodic flux: grid must span one
/// period with equal counts. Gaussian or compact flux: zero-padded FFT on the
/// lattice through the grid origin. uloc-only: refused.
std::vector<double> classical_pressure(const FluxField& f, double t, const Grid3& grid, int padding = 2);

/// <pbar, d_k beta> for k = 0..2 through the ball B_rho(c) of the bump:
/// near = int theta f_ij R_i R_j d_k beta, far = int (1 - theta) f_ij d_k K_ij(. - c).
struct PairingParts {
  Vec3 near = Vec3::Zero();
  Vec3 far = Vec3::Zero();
  int shells = 0;
  bool converged = false;
  Vec3 total() const { return near + far; }
};

class PairingEngine {
 public:
  PairingEngine(FluxField f, TestBump beta, FarOptions opt = {});
  PairingParts operator()(double t);

 private:
  FluxField f_;
  TestBump beta_;
  FarOptions opt_;
  double near_scale_ = 0.0;
  ShellPlan plan_;
};

PairingParts gradient_pairing(const FluxField& f, const TestBump& beta, double t, const FarOptions& opt = {});

}  // namespace nspg
