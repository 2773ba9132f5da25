#include "nspg/pressure.hpp"

#include <fftw3.h>

#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "nspg/quadrature.hpp"
#include "resolution.hpp"

namespace nspg {

using detail::field_degree;
using detail::field_width;
using detail::support_range;

// ---------------------------------------------------------------- fluxes

FluxField momentum_flux(const VectorField& u) {
  FieldTraits tr = u.traits();
  tr.generator = "flux(" + tr.generator + ")";
  tr.wavenumber *= 2.0;
  tr.length_scale /= 2.0;
  if (tr.sup_bound) tr.sup_bound = 3.0 * *tr.sup_bound * *tr.sup_bound;
  return {[u](const Vec3& x, double t) {
            const Vec3 v = u(x, t);
            return Mat3(v * v.transpose());
          },
          tr};
}

FluxField outer_flux(std::function<Vec3(double)> c, double sup_c, const VectorField& u) {
  FieldTraits tr = u.traits();
  tr.generator = "outer(" + tr.generator + ")";
  if (tr.sup_bound) tr.sup_bound = 3.0 * sup_c * *tr.sup_bound;
  return {[c, u](const Vec3& x, double t) { return Mat3(c(t) * u(x, t).transpose()); }, tr};
}

FluxField drift_cross_flux(std::function<Vec3(double)> c, double sup_c, const VectorField& u) {
  FieldTraits tr = u.traits();
  tr.generator = "cross(" + tr.generator + ")";
  if (tr.sup_bound) tr.sup_bound = 6.0 * sup_c * *tr.sup_bound + 3.0 * sup_c * sup_c;
  if (tr.decay != DecayClass::BoundedPeriodic) tr.decay = DecayClass::UlocOnly;
  tr.support.reset();
  return {[c, u](const Vec3& x, double t) {
            const Vec3 a = c(t), v = u(x, t);
            return Mat3(a * v.transpose() + v * a.transpose() + a * a.transpose());
          },
          tr};
}

// ---------------------------------------------------------------- FFT

namespace {

std::mutex& fftw_mutex() {
  static std::mutex mu;
  return mu;
}

int good_fft_size(int n) {
  for (int m = std::max(n, 2);; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

struct FftwBuffers {
  double* real = nullptr;
  fftw_complex* tmp = nullptr;
  fftw_complex* acc = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  FftwBuffers(int m3, int m2, int m1) {
    const std::size_t nr = static_cast<std::size_t>(m3) * m2 * m1;
    const std::size_t nc = static_cast<std::size_t>(m3) * m2 * (m1 / 2 + 1);
    real = fftw_alloc_real(nr);
    tmp = fftw_alloc_complex(nc);
    acc = fftw_alloc_complex(nc);
    if (!real || !tmp || !acc) throw Error("riesz_apply: FFT buffer allocation failed");
    std::lock_guard lock(fftw_mutex());
    fwd = fftw_plan_dft_r2c_3d(m3, m2, m1, real, tmp, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_3d(m3, m2, m1, acc, real, FFTW_ESTIMATE);
  }
  ~FftwBuffers() {
    {
      std::lock_guard lock(fftw_mutex());
      if (fwd) fftw_destroy_plan(fwd);
      if (bwd) fftw_destroy_plan(bwd);
    }
    fftw_free(real);
    fftw_free(tmp);
    fftw_free(acc);
  }
  FftwBuffers(const FftwBuffers&) = delete;
  FftwBuffers& operator=(const FftwBuffers&) = delete;
};

void check_boundary(const std::array<int, 3>& n, std::span<const double> d) {
  double inner = 0.0, edge = 0.0;
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const double v = std::abs(d[(static_cast<std::size_t>(k) * n[1] + j) * n[0] + i]);
        inner = std::max(inner, v);
        if (i == 0 || j == 0 || k == 0 || i == n[0] - 1 || j == n[1] - 1 || k == n[2] - 1) edge = std::max(edge, v);
      }
  if (edge > 1e-12 * inner) {
    std::ostringstream os;
    os << "riesz_apply: support touches the window boundary (edge/max = " << edge / inner << ")";
    throw Error(os.str());
  }
}

}  // namespace

std::vector<double> riesz_apply(const std::array<int, 3>& n, double h, std::span<const RieszTerm> terms, int padding,
                                ZeroMode zero) {
  if (padding < 1) throw Error("riesz_apply: padding must be >= 1");
  if (!(h > 0.0)) throw Error("riesz_apply: spacing must be positive");
  const std::size_t ncount = static_cast<std::size_t>(n[0]) * n[1] * n[2];
  for (const auto& t : terms) {
    if (t.i < 0 || t.i > 2 || t.j < 0 || t.j > 2) throw Error("riesz_apply: component index out of range");
    if (t.data.size() != ncount) throw Error("riesz_apply: data size does not match the lattice");
    if (padding > 1) check_boundary(n, t.data);
  }
  std::array<int, 3> M;
  for (int a = 0; a < 3; ++a) M[a] = padding == 1 ? n[a] : good_fft_size(padding * n[a]);
  const int mh = M[0] / 2 + 1;
  const std::size_t nc = static_cast<std::size_t>(M[2]) * M[1] * mh;
  const std::size_t nr = static_cast<std::size_t>(M[2]) * M[1] * M[0];

  std::array<std::vector<double>, 3> xi;
  std::array<std::vector<char>, 3> nyq;
  for (int a = 0; a < 3; ++a) {
    const int len = a == 0 ? mh : M[a];
    xi[a].resize(len);
    nyq[a].resize(len);
    for (int q = 0; q < len; ++q) {
      const int m = (a == 0 || q <= M[a] / 2) ? q : q - M[a];
      xi[a][q] = 2.0 * kPi * m / (M[a] * h);
      nyq[a][q] = (M[a] % 2 == 0 && std::abs(m) == M[a] / 2) ? 1 : 0;
    }
  }

  FftwBuffers buf(M[2], M[1], M[0]);
  std::fill(reinterpret_cast<double*>(buf.acc), reinterpret_cast<double*>(buf.acc) + 2 * nc, 0.0);
  for (const auto& t : terms) {
    std::fill(buf.real, buf.real + nr, 0.0);
    for (int k = 0; k < n[2]; ++k)
      for (int j = 0; j < n[1]; ++j) {
        const double* src = t.data.data() + (static_cast<std::size_t>(k) * n[1] + j) * n[0];
        std::copy(src, src + n[0], buf.real + (static_cast<std::size_t>(k) * M[1] + j) * M[0]);
      }
    fftw_execute_dft_r2c(buf.fwd, buf.real, buf.tmp);
    const double zero_value = zero == ZeroMode::FreeSpace && t.i == t.j ? -1.0 / 3.0 : 0.0;
    for (int k = 0; k < M[2]; ++k)
      for (int j = 0; j < M[1]; ++j)
        for (int i = 0; i < mh; ++i) {
          const std::size_t idx = (static_cast<std::size_t>(k) * M[1] + j) * mh + i;
          const double x[3] = {xi[0][i], xi[1][j], xi[2][k]};
          const char ny[3] = {nyq[0][i], nyq[1][j], nyq[2][k]};
          const double q2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
          double mult;
          if (q2 == 0.0) {
            mult = zero_value;
          } else if (t.i != t.j && (ny[t.i] || ny[t.j])) {
            mult = 0.0;
          } else {
            mult = -x[t.i] * x[t.j] / q2;
          }
          mult *= t.weight;
          buf.acc[idx][0] += mult * buf.tmp[idx][0];
          buf.acc[idx][1] += mult * buf.tmp[idx][1];
        }
  }
  fftw_execute_dft_c2r(buf.bwd, buf.acc, buf.real);
  std::vector<double> out(ncount);
  const double scale = 1.0 / static_cast<double>(nr);
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i)
        out[(static_cast<std::size_t>(k) * n[1] + j) * n[0] + i] =
            scale * buf.real[(static_cast<std::size_t>(k) * M[1] + j) * M[0] + i];
  return out;
}

std::vector<double> riesz_pair_apply(const Grid3& grid, std::span<const double> f, int i, int j, int padding,
                                     ZeroMode zero) {
  const RieszTerm term{i, j, 1.0, f};
  return riesz_apply(grid.n, grid.h, std::span<const RieszTerm>(&term, 1), padding, zero);
}

namespace {

constexpr int kSym[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};

/// Samples the symmetric part of w(y) f(y) on a grid and contracts with R_i R_j.
std::vector<double> contract_on_grid(const FluxField& f, double t, const Grid3& g,
                                     const std::function<double(const Vec3&)>& weight, int padding, ZeroMode zero) {
  std::array<std::vector<double>, 6> comp;
  for (auto& c : comp) c.assign(g.size(), 0.0);
  for (int k = 0; k < g.n[2]; ++k)
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i) {
        const Vec3 y = g.node(i, j, k);
        const double w = weight ? weight(y) : 1.0;
        if (w == 0.0) continue;
        const Mat3 F = f(y, t);
        const std::size_t idx = g.index(i, j, k);
        for (int s = 0; s < 6; ++s) {
          const int a = kSym[s][0], b = kSym[s][1];
          const double v = w * 0.5 * (F(a, b) + F(b, a));
          if (!std::isfinite(v)) throw Error("flux is not finite at a sample node");
          comp[s][idx] = v;
        }
      }
  std::vector<RieszTerm> terms;
  for (int s = 0; s < 6; ++s) {
    if (std::all_of(comp[s].begin(), comp[s].end(), [](double v) { return v == 0.0; })) continue;
    terms.push_back({kSym[s][0], kSym[s][1], s < 3 ? 1.0 : 2.0, comp[s]});
  }
  if (terms.empty()) return std::vector<double>(g.size(), 0.0);
  return riesz_apply(g.n, g.h, terms, padding, zero);
}

/// Lattice h Z^3 (shifted by offset) covering [lo, hi] with one spare node per side.
Grid3 covering_lattice(const Vec3& lo, const Vec3& hi, double h, const Vec3& offset = Vec3::Zero()) {
  std::array<int, 3> n;
  Vec3 origin;
  for (int a = 0; a < 3; ++a) {
    const long il = static_cast<long>(std::floor((lo[a] - offset[a]) / h + 1e-9)) - 1;
    const long ih = static_cast<long>(std::ceil((hi[a] - offset[a]) / h - 1e-9)) + 1;
    origin[a] = offset[a] + il * h;
    n[a] = static_cast<int>(ih - il + 1);
  }
  return Grid3(origin, h, n);
}

}  // namespace

Grid3 ball_lattice(const BallSpec& ball, double h) {
  std::array<int, 3> n;
  Vec3 origin;
  for (int a = 0; a < 3; ++a) {
    const long il = static_cast<long>(std::ceil((ball.x0[a] - ball.R) / h - 1e-9));
    const long ih = static_cast<long>(std::floor((ball.x0[a] + ball.R) / h + 1e-9));
    origin[a] = il * h;
    n[a] = static_cast<int>(std::max<long>(ih - il + 1, 2));
  }
  return Grid3(origin, h, n);
}

BallGridValues near_pressure(const FluxField& f, const BallSpec& ball, double t, const NearOptions& opt) {
  const double h = opt.h > 0.0 ? opt.h : std::min(ball.R / 8.0, f.traits.length_scale / 2.0);
  const Grid3 out_grid = ball_lattice(ball, h);
  Vec3 lo = ball.x0 - Vec3::Constant(4.0 * ball.R), hi = ball.x0 + Vec3::Constant(4.0 * ball.R);
  if (f.traits.support) {
    const auto& s = *f.traits.support;
    lo = lo.cwiseMax(s.center - Vec3::Constant(s.radius));
    hi = hi.cwiseMin(s.center + Vec3::Constant(s.radius));
  }
  const Vec3 olo = out_grid.origin, ohi = out_grid.node(out_grid.n[0] - 1, out_grid.n[1] - 1, out_grid.n[2] - 1);
  lo = lo.cwiseMin(olo);
  hi = hi.cwiseMax(ohi);
  const Grid3 win = covering_lattice(lo, hi, h);
  const CutoffSpec cut = ball.cutoff();
  auto weight = [&](const Vec3& y) {
    const double w = cut(y - ball.x0);
    if (w == 0.0) return 0.0;
    if (f.traits.support && (y - f.traits.support->center).norm() > f.traits.support->radius) return 0.0;
    return w;
  };
  const std::vector<double> full = contract_on_grid(f, t, win, weight, opt.padding, ZeroMode::FreeSpace);

  BallGridValues out{out_grid, std::vector<double>(out_grid.size()), std::vector<unsigned char>(out_grid.size())};
  for (int k = 0; k < out_grid.n[2]; ++k)
    for (int j = 0; j < out_grid.n[1]; ++j)
      for (int i = 0; i < out_grid.n[0]; ++i) {
        const Vec3 x = out_grid.node(i, j, k);
        const int wi = static_cast<int>(std::lround((x[0] - win.origin[0]) / h));
        const int wj = static_cast<int>(std::lround((x[1] - win.origin[1]) / h));
        const int wk = static_cast<int>(std::lround((x[2] - win.origin[2]) / h));
        const std::size_t idx = out_grid.index(i, j, k);
        out.values[idx] = full[win.index(wi, wj, wk)];
        out.inside[idx] = ball.contains(x) ? 1 : 0;
      }
  return out;
}

// ---------------------------------------------------------------- quadrature plumbing

namespace {

/// Calls body(r, radial weight including r^2, sphere rule) over a composite
/// radial rule through the given breakpoints, clipped to [clip_lo, clip_hi].
template <class Degree, class Body>
void for_each_radius(std::vector<double> breaks, double clip_lo, double clip_hi, double max_width, double scale,
                     Degree&& degree, Body&& body) {
  std::vector<double> pts;
  for (double b : breaks) pts.push_back(std::clamp(b, clip_lo, clip_hi));
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const int nr = std::max(4, static_cast<int>(std::ceil(16.0 * scale)));
  for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
    const double a = pts[p], b = pts[p + 1];
    if (!(b > a)) continue;
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / max_width - 1e-12)));
    const double step = (b - a) / pieces;
    for (int q = 0; q < pieces; ++q) {
      const double pa = a + q * step, pb = pa + step;
      const Rule1D rule = gauss_legendre(nr, pa, pb);
      const AngularOrder ao = angular_order_for_degree(scale * degree(pa, pb) + 8.0);
      const SphereRule& sr = cached_sphere_rule(ao.n_theta, ao.n_phi);
      for (std::size_t i = 0; i < rule.size(); ++i) body(rule.x[i], rule.w[i] * rule.x[i] * rule.x[i], sr);
    }
  }
}

double contract_K(const Vec3& z, const Mat3& F) {
  const double r2 = z.squaredNorm();
  const double r = std::sqrt(r2);
  return (-F.trace() * r2 + 3.0 * z.dot(F * z)) / (4.0 * kPi * r2 * r2 * r);
}

/// sum_ij T_ijk F_ij for T = b (delta_ij y_k + delta_ik y_j + delta_jk y_i) + c y_i y_j y_k.
Vec3 contract_T(const Vec3& y, const Mat3& F, double b, double c) {
  return b * (F.trace() * y + F * y + F.transpose() * y) + c * y.dot(F * y) * y;
}

double smooth_shell_weight(double r, double R, int m) {
  const double outer = CutoffSpec{std::ldexp(R, m)}.radial(r);
  const double inner = CutoffSpec{std::ldexp(R, m - 1)}.radial(r);
  return outer - inner;
}

double sup_flux(const FluxField& f) {
  if (f.traits.sup_bound) return *f.traits.sup_bound;
  return std::numeric_limits<double>::infinity();
}

}  // namespace

// ---------------------------------------------------------------- near at points

std::vector<double> near_pressure_at(const FluxField& f, const BallSpec& ball, double t, std::span<const Vec3> pts,
                                     const PointOptions& opt) {
  const CutoffSpec cut = ball.cutoff();
  const FieldTraits& tr = f.traits;
  auto g = [&](const Vec3& y) -> Mat3 {
    const double w = cut(y - ball.x0);
    if (w == 0.0) return Mat3::Zero();
    return w * f(y, t);
  };
  auto eval = [&](const Vec3& x, double scale) {
    const double d = (x - ball.x0).norm();
    auto [slo, shi] = support_range(tr, x);
    const double hi = std::min(shi, 4.0 * ball.R + d);
    const double lo = std::min(slo, hi);
    std::vector<double> breaks = {lo, 2.0 * ball.R - d, 4.0 * ball.R + d, hi};
    const double width = std::min(ball.R / 2.0, field_width(tr));
    double acc = 0.0;
    for_each_radius(
        breaks, lo, hi, width, scale,
        [&](double, double b) {
          const double band = (b > 2.0 * ball.R - d) ? 8.0 + 8.0 * d / ball.R : 0.0;
          return field_degree(tr, b) + band + 6.0;
        },
        [&](double r, double wr2, const SphereRule& sr) {
          double s = 0.0;
          for (std::size_t a = 0; a < sr.size(); ++a) {
            const Mat3 G = g(x + r * sr.dir[a]);
            if (G.isZero(0.0)) continue;
            const Vec3& w = sr.dir[a];
            s += sr.w[a] * (-G.trace() + 3.0 * w.dot(G * w));
          }
          acc += wr2 / (r * r * r) * s / (4.0 * kPi);
        });
    return -g(x).trace() / 3.0 + acc;
  };
  std::vector<double> out(pts.size());
  if (pts.empty()) return out;
  std::size_t probe = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if ((pts[i] - ball.x0).norm() > (pts[probe] - ball.x0).norm()) probe = i;
  double scale = opt.order_scale;
  double v_hi = 0.0;
  for (int it = 0; it < 5; ++it) {
    const double v_lo = eval(pts[probe], scale);
    v_hi = eval(pts[probe], 1.5 * scale);
    scale *= 1.5;
    if (std::abs(v_hi - v_lo) <= opt.tol * std::max(1.0, std::abs(v_hi))) break;
  }
  out[probe] = v_hi;
  parallel_for(pts.size(), [&](std::size_t i) {
    if (i != probe) out[i] = eval(pts[i], scale);
  });
  return out;
}

// ---------------------------------------------------------------- far part

double far_shell_bound(const FluxField& f) { return 192.0 * sup_flux(f); }

FarResult far_pressure(const FluxField& f, const BallSpec& ball, double t, std::span<const Vec3> pts,
                       const FarOptions& opt, ShellPlan* plan) {
  const FieldTraits& tr = f.traits;
  if (!tr.sup_bound && !tr.support) throw Error("far_pressure: flux carries no decay or bound metadata");
  double r_t = 0.0;
  for (const auto& x : pts) {
    const double d = (x - ball.x0).norm();
    if (d > ball.R * (1.0 + 1e-12)) throw Error("far_pressure: evaluation point outside the ball");
    r_t = std::max(r_t, d);
  }
  const auto [slo, shi] = support_range(tr, ball.x0);
  const double R = ball.R;

  std::vector<std::size_t> sentinel;
  if (pts.size() <= 8) {
    for (std::size_t i = 0; i < pts.size(); ++i) sentinel.push_back(i);
  } else {
    for (int s = 0; s < 7; ++s) sentinel.push_back(s * (pts.size() - 1) / 6);
    std::size_t far_i = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if ((pts[i] - ball.x0).norm() > (pts[far_i] - ball.x0).norm()) far_i = i;
    sentinel.push_back(far_i);
  }

  auto shell_values = [&](int m, double scale, std::span<const std::size_t> which) {
    const double rin = std::ldexp(R, m), rout = std::ldexp(R, m + 2);
    std::vector<double> acc(which.size(), 0.0);
    const double ratio = rin / std::max(r_t, 1e-3 * R);
    const double kdeg = 24.0 / std::log(ratio) + 4.0;
    const double width = std::min((rout - rin) / 4.0, field_width(tr));
    for_each_radius(
        {rin, 2.0 * rin, rout}, std::max(rin, slo), std::min(rout, shi), width, scale,
        [&](double, double b) { return field_degree(tr, b) + kdeg; },
        [&](double r, double wr2, const SphereRule& sr) {
          const double w = wr2 * smooth_shell_weight(r, R, m);
          if (w == 0.0) return;
          for (std::size_t a = 0; a < sr.size(); ++a) {
            const Vec3 y = ball.x0 + r * sr.dir[a];
            const Mat3 F = (w * sr.w[a]) * f(y, t);
            const double base = contract_K(ball.x0 - y, F);
            for (std::size_t q = 0; q < which.size(); ++q) acc[q] += contract_K(pts[which[q]] - y, F) - base;
          }
        });
    return acc;
  };

  std::vector<std::size_t> all(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) all[i] = i;
  FarResult res;
  res.values.assign(pts.size(), 0.0);
  res.shell_bound = far_shell_bound(f);
  const bool reuse = plan && !plan->empty();
  const int max_m = reuse ? plan->shells : opt.max_shells;
  ShellPlan built;
  bool converged = false;
  int m = 1;
  for (; m <= max_m; ++m) {
    const double rin = std::ldexp(R, m);
    if (rin >= shi) {
      converged = true;
      break;
    }
    std::vector<double> vals;
    double scale = reuse ? plan->scale[m - 1] : opt.order_scale;
    if (!reuse) {
      bool ok = false;
      for (int it = 0; it < 5 && !ok; ++it) {
        const auto lo = shell_values(m, scale, sentinel);
        const auto hi_vals = shell_values(m, 1.5 * scale, sentinel);
        double diff = 0.0, mag = 0.0;
        for (std::size_t q = 0; q < lo.size(); ++q) {
          diff = std::max(diff, std::abs(hi_vals[q] - lo[q]));
          mag = std::max(mag, std::abs(hi_vals[q]));
        }
        ok = diff <= std::max(opt.tol / 20.0, 1e-12 * mag);
        if (ok && sentinel.size() == pts.size()) vals = lo;
        if (!ok) scale *= 1.5;
      }
      if (!ok) built.converged = false;
    }
    if (vals.empty()) vals = shell_values(m, scale, all);
    built.scale.push_back(scale);
    double mx = 0.0;
    for (std::size_t q = 0; q < pts.size(); ++q) {
      res.values[q] += vals[q];
      mx = std::max(mx, std::abs(vals[q]));
    }
    res.last_shell = mx;
    if (!reuse && m >= 2 && mx < opt.tol / 10.0) {
      converged = true;
      ++m;
      break;
    }
  }
  res.shells = m - 1;
  res.converged = reuse ? plan->converged : converged;
  const double reach = std::ldexp(R, res.shells + 1);
  res.tail_bound = reach >= shi ? 0.0 : 384.0 * r_t * sup_flux(f) / reach;
  res.tail_within_tol = res.tail_bound <= opt.tol;
  if (plan && !reuse) {
    built.shells = res.shells;
    built.converged = res.converged;
    *plan = built;
  }
  return res;
}

// ---------------------------------------------------------------- assembled expansions

PressureExpansion local_expansion(const FluxField& f, const BallSpec& ball, double t, const NearOptions& near_opt,
                                  const FarOptions& far_opt) {
  const BallGridValues near = near_pressure(f, ball, t, near_opt);
  PressureExpansion e;
  e.ball = ball;
  e.t = t;
  e.grid = near.grid;
  e.inside = near.inside;
  e.near = near.values;
  e.far.assign(near.values.size(), 0.0);
  std::vector<Vec3> pts;
  std::vector<std::size_t> idx;
  for (int k = 0; k < e.grid.n[2]; ++k)
    for (int j = 0; j < e.grid.n[1]; ++j)
      for (int i = 0; i < e.grid.n[0]; ++i) {
        const std::size_t q = e.grid.index(i, j, k);
        if (!e.inside[q]) continue;
        pts.push_back(e.grid.node(i, j, k));
        idx.push_back(q);
      }
  if (pts.empty()) throw Error("local_expansion: no lattice node inside the ball; refine h");
  const FarResult far = far_pressure(f, ball, t, pts, far_opt);
  double sum = 0.0;
  for (std::size_t q = 0; q < pts.size(); ++q) {
    e.far[idx[q]] = far.values[q];
    sum += e.near[idx[q]] + far.values[q];
  }
  e.mean = sum / static_cast<double>(pts.size());
  e.far_tail_bound = far.tail_bound;
  e.far_converged = far.converged;
  return e;
}

double glue_constant(const FluxField& f, int k, double t, double tol) {
  if (k < 2) throw Error("glue_constant: k must be >= 2");
  const FieldTraits& tr = f.traits;
  const auto [slo, shi] = support_range(tr, Vec3::Zero());
  const double a = 2.0 * (k - 1), b = 4.0 * k;
  const CutoffSpec outer{static_cast<double>(k)}, inner{static_cast<double>(k - 1)};
  auto eval = [&](double scale) {
    double acc = 0.0;
    for_each_radius(
        {a, 2.0 * k, 4.0 * (k - 1), b}, std::max(a, slo), std::min(b, shi),
        std::min((b - a) / 4.0, field_width(tr)), scale, [&](double, double hi) { return field_degree(tr, hi) + 6.0; },
        [&](double r, double wr2, const SphereRule& sr) {
          const double w = wr2 * (outer.radial(r) - inner.radial(r));
          if (w == 0.0) return;
          for (std::size_t q = 0; q < sr.size(); ++q) {
            const Vec3 y = r * sr.dir[q];
            acc += w * sr.w[q] * contract_K(y, f(y, t));
          }
        });
    return -acc;
  };
  double scale = 1.0, hi = 0.0;
  for (int it = 0; it < 5; ++it) {
    const double lo = eval(scale);
    hi = eval(1.5 * scale);
    scale *= 1.5;
    if (std::abs(hi - lo) <= std::max(tol, 1e-12 * std::abs(hi))) break;
  }
  return hi;
}

std::vector<double> glue_constants(const FluxField& f, int n, double t, double tol) {
  std::vector<double> c(static_cast<std::size_t>(std::max(n, 1)) + 1, 0.0);
  for (int k = 2; k <= n; ++k) c[k] = glue_constant(f, k, t, tol);
  return c;
}

std::vector<double> global_expansion_at(const FluxField& f, std::span<const Vec3> pts, double t,
                                        const GlobalOptions& opt) {
  int n = opt.n;
  if (n == 0) {
    for (const auto& x : pts) n = std::max(n, static_cast<int>(std::floor(x.norm())) + 1);
    n = std::max(n, 1);
  }
  for (const auto& x : pts)
    if (!(x.norm() < n)) throw Error("global_expansion_at: point outside B_n(0)");
  const BallSpec ball(Vec3::Zero(), n);
  std::vector<double> out = near_pressure_at(f, ball, t, pts, opt.near);
  const FarResult far = far_pressure(f, ball, t, pts, opt.far);
  const std::vector<double> c = glue_constants(f, n, t, opt.far.tol / 10.0);
  double csum = 0.0;
  for (int k = 2; k <= n; ++k) csum += c[k];
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] += far.values[i] + csum;
  return out;
}

double global_expansion(const FluxField& f, const Vec3& x, double t, const GlobalOptions& opt) {
  const Vec3 p[1] = {x};
  return global_expansion_at(f, p, t, opt)[0];
}

std::vector<double> classical_pressure(const FluxField& f, double t, const Grid3& grid, int padding) {
  const FieldTraits& tr = f.traits;
  switch (tr.decay) {
    case DecayClass::UlocOnly:
      throw Error("classical_pressure: uloc-only flux has no convergent classical pressure");
    case DecayClass::BoundedPeriodic: {
      if (!tr.period) throw Error("classical_pressure: periodic flux without a period");
      for (int a = 0; a < 3; ++a) {
        if (grid.n[a] != grid.n[0] || std::abs(grid.n[a] * grid.h - *tr.period) > 1e-9 * *tr.period) {
          throw Error("classical_pressure: periodic grid must span exactly one period in every direction");
        }
      }
      return contract_on_grid(f, t, grid, nullptr, 1, ZeroMode::Periodic);
    }
    case DecayClass::Gaussian:
    case DecayClass::CompactSupport: {
      if (!tr.support) throw Error("classical_pressure: decaying flux without an effective support");
      const auto& s = *tr.support;
      const Vec3 ghi = grid.node(grid.n[0] - 1, grid.n[1] - 1, grid.n[2] - 1);
      const Vec3 lo = grid.origin.cwiseMin(s.center - Vec3::Constant(s.radius));
      const Vec3 hi = ghi.cwiseMax(s.center + Vec3::Constant(s.radius));
      const Grid3 win = covering_lattice(lo, hi, grid.h, grid.origin);
      auto weight = [&](const Vec3& y) { return (y - s.center).norm() > s.radius ? 0.0 : 1.0; };
      const std::vector<double> full = contract_on_grid(f, t, win, weight, padding, ZeroMode::FreeSpace);
      std::vector<double> out(grid.size());
      const Vec3 off = (grid.origin - win.origin) / grid.h;
      const int oi = static_cast<int>(std::lround(off[0])), oj = static_cast<int>(std::lround(off[1])),
                ok = static_cast<int>(std::lround(off[2]));
      for (int k = 0; k < grid.n[2]; ++k)
        for (int j = 0; j < grid.n[1]; ++j)
          for (int i = 0; i < grid.n[0]; ++i) out[grid.index(i, j, k)] = full[win.index(i + oi, j + oj, k + ok)];
      return out;
    }
  }
  throw Error("classical_pressure: unknown decay class");
}

// ---------------------------------------------------------------- distributional pairing

PairingEngine::PairingEngine(FluxField f, TestBump beta, FarOptions opt)
    : f_(std::move(f)), beta_(std::move(beta)), opt_(opt) {
  if (!f_.traits.sup_bound && !f_.traits.support) throw Error("PairingEngine: flux carries no decay metadata");
}

PairingParts PairingEngine::operator()(double t) {
  const FieldTraits& tr = f_.traits;
  const Vec3 c = beta_.center();
  const double rho = beta_.radius();
  const auto [slo, shi] = support_range(tr, c);
  const CutoffSpec cut{rho};

  auto near_eval = [&](double scale) {
    Vec3 acc = Vec3::Zero();
    for_each_radius(
        {0.0, rho, 2.0 * rho, 4.0 * rho}, std::min(slo, 4.0 * rho), std::min(shi, 4.0 * rho),
        std::min(rho / 2.0, field_width(tr)), scale, [&](double, double b) { return field_degree(tr, b) + 6.0; },
        [&](double r, double wr2, const SphereRule& sr) {
          const double w = wr2 * cut.radial(r);
          if (w == 0.0) return;
          const double b = beta_.potential_b(r), cc = beta_.potential_c(r);
          for (std::size_t a = 0; a < sr.size(); ++a) {
            const Vec3 y = r * sr.dir[a];
            acc += (w * sr.w[a]) * contract_T(y, f_(c + y, t), b, cc);
          }
        });
    return acc;
  };
  auto shell_eval = [&](int m, double scale) {
    const double rin = std::ldexp(rho, m), rout = std::ldexp(rho, m + 2);
    Vec3 acc = Vec3::Zero();
    for_each_radius(
        {rin, 2.0 * rin, rout}, std::max(rin, slo), std::min(rout, shi),
        std::min((rout - rin) / 4.0, field_width(tr)), scale, [&](double, double b) { return field_degree(tr, b) + 6.0; },
        [&](double r, double wr2, const SphereRule& sr) {
          const double w = wr2 * smooth_shell_weight(r, rho, m);
          if (w == 0.0) return;
          const double b = 3.0 / (4.0 * kPi * std::pow(r, 5)), cc = -15.0 / (4.0 * kPi * std::pow(r, 7));
          for (std::size_t a = 0; a < sr.size(); ++a) {
            const Vec3 y = r * sr.dir[a];
            acc += (w * sr.w[a]) * contract_T(y, f_(c + y, t), b, cc);
          }
        });
    return acc;
  };

  PairingParts out;
  if (near_scale_ == 0.0) {
    double scale = opt_.order_scale;
    for (int it = 0; it < 5; ++it) {
      const Vec3 lo = near_eval(scale);
      const Vec3 hi = near_eval(1.5 * scale);
      if ((hi - lo).lpNorm<Eigen::Infinity>() <= std::max(opt_.tol / 20.0, 1e-12 * hi.norm())) break;
      scale *= 1.5;
    }
    near_scale_ = scale;
  }
  out.near = near_eval(near_scale_);

  const bool reuse = !plan_.empty();
  const int max_m = reuse ? plan_.shells : opt_.max_shells;
  ShellPlan built;
  bool converged = false;
  int m = 1;
  for (; m <= max_m; ++m) {
    if (std::ldexp(rho, m) >= shi) {
      converged = true;
      break;
    }
    double scale = reuse ? plan_.scale[m - 1] : opt_.order_scale;
    Vec3 v;
    if (reuse) {
      v = shell_eval(m, scale);
    } else {
      for (int it = 0; it < 5; ++it) {
        const Vec3 lo = shell_eval(m, scale);
        v = shell_eval(m, 1.5 * scale);
        if ((v - lo).lpNorm<Eigen::Infinity>() <= std::max(opt_.tol / 20.0, 1e-12 * v.norm())) {
          v = lo;
          break;
        }
        scale *= 1.5;
      }
    }
    built.scale.push_back(scale);
    out.far += v;
    const double mx = v.lpNorm<Eigen::Infinity>();
    if (!reuse && m >= 2 && mx < opt_.tol / 10.0) {
      converged = true;
      ++m;
      break;
    }
  }
  out.shells = m - 1;
  out.converged = reuse ? plan_.converged : converged;
  if (!reuse) {
    built.shells = out.shells;
    built.converged = out.converged;
    plan_ = built;
  }
  return out;
}

PairingParts gradient_pairing(const FluxField& f, const TestBump& beta, double t, const FarOptions& opt) {
  PairingEngine e(f, beta, opt);
  return e(t);
}

}  // namespace nspg
