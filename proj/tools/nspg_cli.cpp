#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "nspg/decay.hpp"
#include "nspg/drift.hpp"
#include "nspg/io.hpp"
#include "nspg/pressure.hpp"
#include "nspg/verify.hpp"

using namespace nspg;

namespace {

/// Flag values collected by CLI11; only the ones given on the command line
/// override the config file.
struct Inputs {
  std::string config_path;
  std::map<std::string, std::string> flags;
  std::vector<std::string> params;
  std::string field;
  std::string out;
  std::string extra_out;
};

void add_key(CLI::App* app, Inputs& in, const std::string& flag, const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(
      "--" + flag, [&in, key](const std::string& v) { in.flags[key] = v; }, help);
}

RunConfig effective_config(const Inputs& in) {
  RunConfig cfg = in.config_path.empty() ? RunConfig() : RunConfig::load(in.config_path);
  for (const auto& [k, v] : in.flags) cfg.set(k, v);
  for (const auto& p : in.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw Error("invalid config: --param expects key=value, got '" + p + "'");
    cfg.set("param." + p.substr(0, eq), p.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

struct Velocity {
  VectorField u;
  std::string origin;
};

Velocity velocity_input(const Inputs& in, const RunConfig& cfg) {
  if (!in.field.empty()) {
    LoadedVelocity lv = load_velocity(in.field);
    return {lv.u, lv.analytic ? "analytic:" + lv.meta.generator : "interpolated:" + in.field};
  }
  auto params = cfg.params();
  if (!params.count("nu")) params["nu"] = cfg.number("nu");
  NamedField nf = make_named_field(cfg.get("name"), params);
  if (!nf.u) throw Error("generator '" + cfg.get("name") + "' is not a velocity field");
  return {*nf.u, "analytic:" + cfg.get("name")};
}

Grid3 output_grid(const RunConfig& cfg) {
  const int n = cfg.integer("grid");
  const double L = cfg.number("extent");
  return Grid3(Vec3::Constant(-L / 2.0), L / n, {n, n, n});
}

TimeGrid output_times(const RunConfig& cfg) {
  const int nt = static_cast<int>(cfg.number("field_times"));
  if (nt < 1) throw Error("invalid config: field_times must be >= 1");
  return nt == 1 ? TimeGrid(0.0, 0.0, 1) : TimeGrid(0.0, cfg.number("t_end"), nt);
}

DriftOptions drift_options(const RunConfig& cfg) {
  DriftOptions o;
  o.nu = cfg.number("nu");
  o.far.tol = cfg.number("tol_far");
  o.far.order_scale = cfg.number("order_scale");
  o.local_tol = cfg.number("tol_local");
  return o;
}

void require_out(const Inputs& in) {
  if (in.out.empty()) throw Error("--out is required");
}

// ---------------------------------------------------------------- subcommands

int run_generate(const Inputs& in) {
  require_out(in);
  const RunConfig cfg = effective_config(in);
  auto params = cfg.params();
  if (!params.count("nu")) params["nu"] = cfg.number("nu");
  const NamedField nf = make_named_field(cfg.get("name"), params);
  const Grid3 g = output_grid(cfg);
  const TimeGrid tg = output_times(cfg);
  const std::string comp = cfg.get("component");
  SampledField s;
  FieldTraits tr;
  if (nf.scalar) {
    s = sample(*nf.scalar, g, tg);
    tr = nf.scalar->traits();
  } else if (comp == "p") {
    if (!nf.p) throw Error("generator '" + nf.name + "' has no pressure");
    s = sample(*nf.p, g, tg);
    tr = nf.p->traits();
  } else if (comp == "u") {
    s = sample(*nf.u, g, tg);
    tr = nf.u->traits();
  } else {
    throw Error("invalid config: component must be u or p");
  }
  write_field(in.out, s, meta_from_traits(tr, cfg.hash()));
  std::printf("wrote %s (rank %d, %d^3 nodes, %d times) config_hash=%s\n", in.out.c_str(), s.rank, g.n[0], tg.n,
              cfg.hash().c_str());
  return 0;
}

int run_pressure(const Inputs& in) {
  require_out(in);
  const RunConfig cfg = effective_config(in);
  const Velocity v = velocity_input(in, cfg);
  const BallSpec ball(cfg.vec3("ball_center"), cfg.number("ball_radius"));
  const double t = cfg.number("t");
  const double h = cfg.number("lattice_h");
  const FluxField f = momentum_flux(v.u);
  const Grid3 g = ball_lattice(ball, h);
  std::vector<Vec3> pts;
  std::vector<std::size_t> idx;
  for (int k = 0; k < g.n[2]; ++k)
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i) {
        const Vec3 x = g.node(i, j, k);
        if ((x - ball.x0).norm() < ball.R) {
          pts.push_back(x);
          idx.push_back(g.index(i, j, k));
        }
      }
  if (pts.empty()) throw Error("pressure-expand: no lattice node inside the ball; reduce lattice_h");
  FarOptions fo;
  fo.tol = cfg.number("tol_far");
  fo.order_scale = cfg.number("order_scale");
  const std::vector<double> near = near_pressure_at(f, ball, t, pts);
  const FarResult far = far_pressure(f, ball, t, pts, fo);
  double mean = 0.0;
  for (std::size_t q = 0; q < pts.size(); ++q) mean += near[q] + far.values[q];
  mean /= static_cast<double>(pts.size());

  SampledField s{g, TimeGrid(t, t, 1), 1, std::vector<double>(g.size(), 0.0)};
  for (std::size_t q = 0; q < pts.size(); ++q) s.values[idx[q]] = near[q] + far.values[q] - mean;
  FieldMeta meta{"expansion", {}, DecayClass::UlocOnly, false, cfg.hash()};
  meta.params = {{"x0", ball.x0[0]}, {"y0", ball.x0[1]}, {"z0", ball.x0[2]}, {"R", ball.R}, {"t", t}};
  write_field(in.out, s, meta);

  if (!in.extra_out.empty()) {
    CsvWriter w(cfg.hash(), {"x1", "x2", "x3", "near", "far", "expansion"});
    w.comment("source=" + v.origin + " far_shells=" + std::to_string(far.shells) +
              " far_converged=" + (far.converged ? "true" : "false") + " tail_bound=" + format_double(far.tail_bound));
    for (std::size_t q = 0; q < pts.size(); ++q) {
      w.row({pts[q][0], pts[q][1], pts[q][2], near[q], far.values[q], near[q] + far.values[q] - mean});
    }
    w.save(in.extra_out);
  }
  std::printf("expansion at %zu nodes, far shells %d, converged %s\n", pts.size(), far.shells,
              far.converged ? "yes" : "no");
  return 0;
}

TestBump bump_from(const RunConfig& cfg) { return TestBump(cfg.vec3("beta_center"), cfg.number("beta_radius")); }

TimeGrid drift_times(const RunConfig& cfg) { return TimeGrid(0.0, cfg.number("t_end"), cfg.integer("time_samples")); }

int run_extract(const Inputs& in) {
  require_out(in);
  const RunConfig cfg = effective_config(in);
  const Velocity v = velocity_input(in, cfg);
  const DriftRecord rec = extract_drift(v.u, v.u, bump_from(cfg), drift_times(cfg), drift_options(cfg));
  CsvWriter w = drift_csv(rec, cfg.hash());
  w.comment("source=" + v.origin);
  w.save(in.out);
  std::printf("drift: sup|phi| = %.6g, int|phi| = %.6g, sup|Phi| = %.6g\n", rec.sup_phi(), rec.l1_norm(),
              rec.sup_Phi());
  return 0;
}

int run_normalize(const Inputs& in) {
  require_out(in);
  const RunConfig cfg = effective_config(in);
  const Velocity v = velocity_input(in, cfg);
  const Normalized n = normalize(v.u, v.u, bump_from(cfg), drift_times(cfg), drift_options(cfg));
  const SampledField s = sample(n.u, output_grid(cfg), output_times(cfg));
  write_field(in.out, s, meta_from_traits(n.u.traits(), cfg.hash()));
  if (!in.extra_out.empty()) {
    CsvWriter w = drift_csv(n.drift, cfg.hash());
    w.comment("source=" + v.origin);
    w.save(in.extra_out);
  }
  std::printf("removed drift with sup|phi| = %.6g\n", n.drift.sup_phi());
  return 0;
}

int run_decay(const Inputs& in) {
  require_out(in);
  const RunConfig cfg = effective_config(in);
  const NamedField nf = make_named_field(cfg.get("name"), cfg.params());
  const std::string cond = cfg.get("condition");
  const double T = cfg.number("t_end");
  const auto radii = cfg.list("radii");
  const auto dist = cfg.list("distances");
  const double R = cfg.number("ball_radius");
  DecayReport rep;
  auto dispatch = [&](const auto& f) {
    if (cond == "A") return cond_A_sweep(f, dist, R, T);
    if (cond == "B") return cond_B_sweep(f, radii, T);
    if (cond == "C") return cond_C_sweep(f, radii, T);
    throw Error("invalid config: condition must be A, B, C or data");
  };
  if (cond == "data") {
    if (!nf.u) throw Error("data condition needs a velocity generator");
    rep = data_sweep(*nf.u, radii);
  } else if (nf.u) {
    rep = dispatch(*nf.u);
  } else {
    rep = dispatch(*nf.scalar);
  }
  decay_csv(rep, cfg.hash()).save(in.out);
  std::printf("%s\n", rep.summary().c_str());
  return 0;
}

int run_matrix(const Inputs& in) {
  require_out(in);
  const RunConfig cfg = effective_config(in);
  const ImplicationMatrix m = implication_matrix(cfg.number("t_end"));
  implication_csv(m, cfg.hash()).save(in.out);
  for (const auto& r : m.rows) {
    std::printf("%-16s A=%s B=%s C=%s\n", r.field.c_str(), to_string(r.A.verdict).c_str(),
                to_string(r.B.verdict).c_str(), to_string(r.C.verdict).c_str());
  }
  for (const auto& b : m.bullets) std::printf("%-20s %s (%s)\n", b.statement.c_str(), b.holds ? "holds" : "FAILS",
                                              b.witness.c_str());
  return m.all_hold() ? 0 : 1;
}

std::vector<CheckReport> run_suite(const std::string& suite, const RunConfig& cfg) {
  const double nu = cfg.number("nu");
  const double T = cfg.number("t_end");
  const FieldPair tg = make_taylor_green(nu);
  const DriftSpec drift = make_sinusoidal_drift(Vec3(0.3, 0.0, 0.0));
  const FieldPair par = inject_drift(tg, drift, T);
  const bool all = suite == "all";
  const bool quick = suite == "quick";
  std::vector<CheckReport> out;
  auto want = [&](const char* name) { return all || suite == name; };

  GaugeOptions go;
  go.t = cfg.number("t");
  go.far.tol = cfg.number("tol_far");
  if (want("lemma-zero") || quick) {
    out.push_back(check_lemma_zero(Vec3(1.0, 0.0, 0.0), tg.u, go));
    GaugeOptions neg = go;
    neg.allow_nondivergent = true;
    CheckReport c = check_lemma_zero(Vec3(1.0, 0.0, 0.0), make_nondivergent_control(), neg);
    c.name = "lemma_zero_control";
    c.negative_control = true;
    out.push_back(c);
  }
  if (want("cross-terms")) out.push_back(check_cross_terms(drift.phi, drift.sup_phi, tg.u, go));
  if (want("harmonic") || quick) {
    HarmonicOptions ho;
    ho.t = cfg.number("t");
    ho.far.tol = cfg.number("tol_far");
    out.push_back(check_harmonic(par.p, par.u, ho));
    const ScalarField pbar = expansion_field(momentum_flux(par.u), ho.ball, {}, ho.far);
    const ScalarField bent([pbar](const Vec3& x, double t) { return pbar(x, t) + x[0] * x[0]; }, pbar.traits());
    CheckReport c = check_harmonic(bent, par.u, ho);
    c.name = "harmonic_control";
    c.negative_control = true;
    out.push_back(c);
  }
  if (want("ns-residual")) {
    WeakOptions wo;
    wo.nu = nu;
    wo.T = T;
    wo.tol = cfg.number("tol_check");
    const auto lib = test_function_library(T);
    CheckReport a = check_ns_residual(tg.u, tg.p, tg.u, lib, wo);
    a.name = "ns_residual_tg";
    out.push_back(a);
    CheckReport b = check_ns_residual(par.u, par.p, par.u, lib, wo);
    b.name = "ns_residual_parasitic";
    out.push_back(b);
  }
  if (want("data")) {
    AttainmentOptions ao;
    ao.T = T;
    CheckReport a = check_data_attainment(tg.u, tg.u, ao);
    a.name = "data_attainment_tg";
    out.push_back(a);
    CheckReport b = check_data_attainment(par.u, par.u, ao);
    b.name = "data_attainment_parasitic";
    out.push_back(b);
  }
  if (want("energy") || quick) {
    EnergyOptions eo;
    eo.nu = nu;
    const EnergyWeight w = make_energy_weight(TestBump(Vec3(0.3, 0.7, 0.2), 1.0), 0.2 * T, 0.8 * T);
    out.push_back(check_local_energy_equality(tg.u, tg.p, w, eo));
    const ScalarField shifted([p = tg.p](const Vec3& x, double t) { return p(x, t) + x[0]; }, tg.p.traits());
    CheckReport c = check_local_energy_equality(tg.u, shifted, w, eo);
    c.name = "local_energy_control";
    c.negative_control = true;
    out.push_back(c);
  }
  if (out.empty()) throw Error("invalid config: unknown suite '" + suite + "'");
  return out;
}

int run_verify(const Inputs& in) {
  const RunConfig cfg = effective_config(in);
  const auto reports = run_suite(cfg.get("suite"), cfg);
  bool ok = true;
  for (const auto& r : reports) {
    std::printf("%s %s%s\n", r.as_expected() ? "ok  " : "FAIL", r.summary().c_str(),
                r.negative_control ? " [negative control]" : "");
    ok = ok && r.as_expected();
  }
  if (!in.out.empty()) check_csv(reports, cfg.hash()).save(in.out);
  std::printf("%s\n", ok ? "all checks as expected" : "some checks failed");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nspg: local pressure expansion, drift extraction and decay diagnostics"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    Inputs in;
    int (*run)(const Inputs&);
  };
  std::vector<std::unique_ptr<Sub>> subs;
  auto make = [&](const char* name, const char* help, int (*run)(const Inputs&)) {
    auto s = std::make_unique<Sub>();
    s->app = app.add_subcommand(name, help);
    s->run = run;
    s->app->add_option("--config", s->in.config_path, "key=value config file")->check(CLI::ExistingFile);
    s->app->add_option("--param", s->in.params, "generator parameter key=value (repeatable)");
    subs.push_back(std::move(s));
    return subs.back().get();
  };

  Sub* gen = make("generate-field", "sample a named generator to a field file", run_generate);
  add_key(gen->app, gen->in, "name", "name", "generator name");
  add_key(gen->app, gen->in, "nu", "nu", "viscosity");
  add_key(gen->app, gen->in, "grid", "grid", "nodes per direction");
  add_key(gen->app, gen->in, "extent", "extent", "cube side length, centred at 0");
  add_key(gen->app, gen->in, "field-times", "field_times", "time samples on [0, t_end]");
  add_key(gen->app, gen->in, "t-end", "t_end", "final time");
  add_key(gen->app, gen->in, "component", "component", "u or p");
  gen->app->add_option("--out", gen->in.out, "output field file");

  Sub* pe = make("pressure-expand", "near + far expansion on one ball", run_pressure);
  pe->app->add_option("--field", pe->in.field, "velocity field file");
  add_key(pe->app, pe->in, "name", "name", "generator name (when no --field)");
  add_key(pe->app, pe->in, "ball-center", "ball_center", "x,y,z");
  add_key(pe->app, pe->in, "ball-radius", "ball_radius", "R");
  add_key(pe->app, pe->in, "t", "t", "time");
  add_key(pe->app, pe->in, "lattice-h", "lattice_h", "lattice spacing");
  add_key(pe->app, pe->in, "tol-far", "tol_far", "far-field tolerance");
  pe->app->add_option("--out", pe->in.out, "output field file");
  pe->app->add_option("--csv", pe->in.extra_out, "probe table");

  for (auto [name, help, run] : {std::tuple{"extract-drift", "drift functional on a time grid", &run_extract},
                                 std::tuple{"normalize", "remove the extracted drift", &run_normalize}}) {
    Sub* s = make(name, help, run);
    s->app->add_option("--field", s->in.field, "velocity field file");
    add_key(s->app, s->in, "name", "name", "generator name (when no --field)");
    add_key(s->app, s->in, "beta-radius", "beta_radius", "test bump radius");
    add_key(s->app, s->in, "beta-center", "beta_center", "x,y,z");
    add_key(s->app, s->in, "t-end", "t_end", "final time");
    add_key(s->app, s->in, "time-samples", "time_samples", "uniform samples on [0, t_end]");
    add_key(s->app, s->in, "nu", "nu", "viscosity");
    add_key(s->app, s->in, "tol-far", "tol_far", "far-field tolerance");
    s->app->add_option("--out", s->in.out, run == &run_extract ? "drift CSV" : "normalized field file");
    if (run == &run_normalize) {
      add_key(s->app, s->in, "grid", "grid", "output nodes per direction");
      add_key(s->app, s->in, "extent", "extent", "output cube side");
      add_key(s->app, s->in, "field-times", "field_times", "output time samples");
      s->app->add_option("--drift-out", s->in.extra_out, "drift CSV");
    }
  }

  Sub* dr = make("decay-report", "decay-condition sweep for a named generator", run_decay);
  add_key(dr->app, dr->in, "name", "name", "generator name");
  add_key(dr->app, dr->in, "condition", "condition", "A, B, C or data");
  add_key(dr->app, dr->in, "radii", "radii", "increasing radii for B, C, data");
  add_key(dr->app, dr->in, "distances", "distances", "increasing |x0| for A");
  add_key(dr->app, dr->in, "ball-radius", "ball_radius", "R for condition A");
  add_key(dr->app, dr->in, "t-end", "t_end", "T");
  dr->app->add_option("--out", dr->in.out, "sweep CSV");

  Sub* im = make("implication-matrix", "implication checks between decay conditions", run_matrix);
  add_key(im->app, im->in, "t-end", "t_end", "T");
  im->app->add_option("--out", im->in.out, "matrix CSV");

  Sub* ve = make("verify", "identity checks", run_verify);
  add_key(ve->app, ve->in, "suite", "suite",
          "all, quick, lemma-zero, cross-terms, harmonic, ns-residual, data or energy");
  add_key(ve->app, ve->in, "t", "t", "time for the pointwise checks");
  add_key(ve->app, ve->in, "t-end", "t_end", "T");
  add_key(ve->app, ve->in, "nu", "nu", "viscosity");
  ve->app->add_option("--out", ve->in.out, "report CSV");

  CLI11_PARSE(app, argc, argv);
  for (const auto& s : subs) {
    if (!s->app->parsed()) continue;
    try {
      return s->run(s->in);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }
  return 2;
}
