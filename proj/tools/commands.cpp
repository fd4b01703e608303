#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>

#include "blockrg/averaging.hpp"
#include "blockrg/error.hpp"
#include "blockrg/gaussian_flow.hpp"
#include "blockrg/greens.hpp"
#include "blockrg/polymer.hpp"

namespace blockrg::cli {

namespace {

const Json& block(const Common& c, const char* name) {
  static const Json empty = Json::object();
  return c.config.contains(name) ? c.config.at(name) : empty;
}

const Json& global(const Common& c) { return block(c, "global"); }

double tolerance(const Common& c, const char* key, double fallback) {
  return get_double(block(c, "tolerances"), key, fallback, 0.0, 1.0);
}

void emit(const CsvTable& t, const std::string& path) {
  if (path.empty() || path == "-")
    std::cout << t.str();
  else
    t.write(path);
}

struct Checks {
  CsvTable table;
  bool ok = true;
  explicit Checks(const std::string& hash) : table({"check", "case", "value", "tolerance", "pass"}, hash) {}
  void add(const std::string& name, const std::string& where, double value, double tol) {
    const bool pass = value <= tol;
    ok = ok && pass;
    table.add({name, where, format_double(value), format_double(tol), pass ? "1" : "0"});
  }
};

int finish(const Checks& ch, const std::string& out) {
  emit(ch.table, out);
  if (!ch.ok) {
    std::cerr << "check failure:\n" << ch.table.str();
    return 4;
  }
  return 0;
}

}  // namespace

Common load_common(const std::string& config_path, std::optional<unsigned> seed, std::optional<std::string> plot) {
  Common c;
  if (!config_path.empty()) c.config = load_json(config_path);
  reject_unknown_keys(c.config,
                      {"global", "seed", "caps", "tolerances", "verify_identities", "gaussian_flow", "greens_decay",
                       "polymers", "cluster", "step", "flow"},
                      "config");
  reject_unknown_keys(global(c),
                      {"d", "L", "m", "N", "M_vol", "lambda", "mu_bar", "a", "eps", "alpha", "p", "p0", "beta", "kappa"},
                      "global");
  reject_unknown_keys(block(c, "tolerances"), {"averaging", "identity", "resolvent", "cluster", "xi"}, "tolerances");
  reject_unknown_keys(block(c, "caps"), {"max_polymers", "max_grid"}, "caps");
  const Json& g = global(c);
  get_int(g, "d", 1, 1, 3);
  get_int(g, "L", 3, 2, 9);
  get_int(g, "m", 0, 0, 4);
  get_int(g, "N", 28, 0, 100000);
  get_int(g, "M_vol", 6, 1, 1000);
  get_double(g, "lambda", 1e-3, 0.0, 1e3);
  get_double(g, "mu_bar", 0.0, 0.0, 1e6);
  get_double(g, "a", 1.0, 1e-6, 1e6);
  get_double(g, "eps", 0.01, 0.0, 0.025);
  get_double(g, "alpha", 0.75, 0.5, 1.0);
  get_int(g, "p", 3, 0, 20);
  get_int(g, "p0", 1, 0, 20);
  get_double(g, "beta", 0.1, 0.0, 0.25);
  get_double(g, "kappa", 1.0, 0.0, 100.0);
  c.seed = static_cast<unsigned>(get_int(c.config, "seed", 1, 0, 1 << 30));
  if (seed) c.seed = *seed;
  Json hashed = c.config;
  hashed["seed"] = c.seed;
  c.hash = config_hash(hashed);
  c.plot_path = std::move(plot);
  return c;
}

int verify_identities(const Common& c, const VerifyArgs& a) {
  const Json& b = block(c, "verify_identities");
  reject_unknown_keys(b, {"samples", "r_values", "k_max"}, "verify_identities");
  const Json& g = global(c);
  const int L = get_int(g, "L", 3, 2, 9);
  const double aa = get_double(g, "a", 1.0, 1e-6, 1e6);
  const int samples = get_int(b, "samples", 100, 1, 100000);
  const int r_values = get_int(b, "r_values", 20, 1, 1000);
  const int k_max = get_int(b, "k_max", 64, 1, 64);
  Checks ch(c.hash);
  const double tol_avg = tolerance(c, "averaging", 1e-13);
  const double tol_id = tolerance(c, "identity", 1e-9);
  const double tol_res = tolerance(c, "resolvent", 1e-8);
  for (int d = 1; d <= 3; ++d) {
    AveragingReport r = averaging_identity_check(d, L, 2, 1, 1, d == 3 ? 2 : 3, 10, c.seed);
    const std::string where = "d=" + std::to_string(d);
    ch.add("averaging_composition", where, r.composition, tol_avg);
    ch.add("averaging_qqt", where, r.qqt, tol_avg);
    ch.add("averaging_projection", where, r.projection, tol_avg);
    ch.add("averaging_constants", where, r.constants, tol_avg);
    ch.add("averaging_adjoint", where, r.adjoint, tol_avg);
    ch.add("averaging_scaling", where, r.scaling, tol_avg);
  }
  double ak_err = 0.0;
  double ak = a_k_closed(aa, L, 1);
  for (int k = 1; k < k_max; ++k) {
    ak = a_k_step(ak, aa, L);
    const double exact = a_k_closed(aa, L, k + 1);
    ak_err = std::max(ak_err, std::abs(ak - exact) / exact);
  }
  ch.add("a_k_recursion", "k<=" + std::to_string(k_max), ak_err, 1e-13);
  for (int d = 1; d <= 2; ++d) {
    const Index side = d == 1 ? 9 : 3 * L;
    GaussParams p;
    p.L = L;
    p.a = aa;
    p.k = 1;
    GaussianLevel lev(TorusLattice(d, L, -1, side * L), p);
    IdentityReport r = free_step_identity_check(lev, samples, c.seed);
    const std::string where = "d=" + std::to_string(d);
    ch.add("fifty", where, r.fifty, tol_id);
    ch.add("eighty", where, r.eighty, tol_id);
    ch.add("delta_form", where, r.delta_form, tol_id);
    ch.add("minimizer", where, r.someday, tol_id);
    ch.add("scaling", where, r.scaling, tol_id);
    double worst = 0.0;
    for (int i = 0; i < r_values; ++i) {
      const double rr = 0.05 + 4.95 * i / std::max(1, r_values - 1);
      worst = std::max(worst, resolvent_identity_check(lev, rr).rel_error);
    }
    ch.add("resolvent", where, worst, tol_res);
  }
  return finish(ch, a.out);
}

int gaussian_flow(const Common& c, const GaussianFlowArgs& a) {
  const Json& b = block(c, "gaussian_flow");
  reject_unknown_keys(b, {"K", "unit_side", "samples"}, "gaussian_flow");
  const Json& g = global(c);
  const int d = get_int(g, "d", 1, 1, 3);
  const int L = get_int(g, "L", 3, 2, 9);
  const double aa = get_double(g, "a", 1.0, 1e-6, 1e6);
  const double mu_bar = get_double(g, "mu_bar", 0.0, 0.0, 1e6);
  const int N = get_int(g, "N", 4, 0, 100000);
  const int K = get_int(b, "K", 3, 1, 12);
  const Index side = get_int(b, "unit_side", 3 * L, 1, 81);
  if (side % L != 0) throw ConfigError("gaussian_flow.unit_side must be a multiple of L");
  const int samples = get_int(b, "samples", 5, 1, 10000);
  const double size = static_cast<double>(side) * std::pow(static_cast<double>(L), K);
  if (std::pow(size, d) > 4000.0) throw CapExceeded("gaussian-flow lattice exceeds 4000 sites");
  CsvTable t({"k", "a_k", "mu_bar_k", "log_z_increment", "identity_residual"}, c.hash);
  std::optional<PlotData> plot;
  if (c.plot_path) plot.emplace(c.hash);
  for (int k = 1; k <= K; ++k) {
    GaussParams p;
    p.L = L;
    p.a = aa;
    p.k = k;
    p.mu_bar_k = mu_bar_schedule(mu_bar, L, N, k);
    GaussianLevel lev(TorusLattice(d, L, -k, side * ipow(L, k)), p);
    const double res = free_step_identity_check(lev, samples, c.seed).max();
    t.add_numbers({static_cast<double>(k), p.a_k(), p.mu_bar_k, lev.log_z_increment(), res});
    if (plot) {
      plot->add("a_k", k, p.a_k());
      plot->add("identity_residual", k, res);
    }
  }
  emit(t, a.out);
  if (plot) plot->write(*c.plot_path);
  return 0;
}

int greens_decay(const Common& c, const GreensArgs& a) {
  if (a.probe != "decay") throw ConfigError("unknown probe '" + a.probe + "'");
  const Json& b = block(c, "greens_decay");
  reject_unknown_keys(b, {"k", "m", "unit_side", "r", "region_cubes"}, "greens_decay");
  const Json& g = global(c);
  const int L = get_int(g, "L", 3, 2, 9);
  const double aa = get_double(g, "a", 1.0, 1e-6, 1e6);
  const int k = get_int(b, "k", 1, 1, 4);
  const int m = get_int(b, "m", 1, 0, 3);
  const Index side = get_int(b, "unit_side", 27, 1, 400);
  const double r = get_double(b, "r", 0.5, 0.0, 1e6);
  const int rc = get_int(b, "region_cubes", 5, 1, 100);
  if (side * ipow(L, k) > 2000) throw CapExceeded("greens-decay lattice exceeds 2000 sites");
  auto suite = greens_decay_suite(1, L, k, m, side, aa, r, rc);
  CsvTable t({"operator", "separation", "block_norm", "gamma", "C"}, c.hash);
  std::optional<PlotData> plot;
  if (c.plot_path) plot.emplace(c.hash);
  for (const auto& s : suite)
    for (const auto& x : s.samples) {
      t.add({s.name, format_double(x.dist), format_double(x.value), format_double(s.fit.gamma),
             format_double(s.fit.C)});
      if (plot) plot->add(s.name, x.dist, x.value);
    }
  emit(t, a.out);
  if (plot) plot->write(*c.plot_path);
  for (const auto& s : suite)
    if (!(s.fit.gamma > 0.0)) {
      std::cerr << "check failure: nonpositive decay rate for " << s.name << '\n';
      return 4;
    }
  return 0;
}

int polymers(const Common& c, const PolymerArgs& a) {
  const Json& b = block(c, "polymers");
  reject_unknown_keys(b, {"a", "kappa0", "L", "clams_max_size"}, "polymers");
  if (a.d < 1 || a.d > 3) throw ConfigError("d must be 1, 2 or 3");
  if (a.max_size < 1 || a.max_size > 8) throw CapExceeded("max-size is limited to 8");
  const double aa = get_double(b, "a", 4.0, 0.0, 100.0);
  const double k0 = get_double(b, "kappa0", 3.0, 0.0, 100.0);
  const int L = get_int(b, "L", 3, 2, 9);
  const int clams = get_int(b, "clams_max_size", std::min(a.max_size, 4), 1, 8);
  CountingReport r = counting_bounds_report(a.d, a.max_size, aa, k0);
  GeometryViolations v = polymer_geometry_audit(a.d, a.max_size, clams, L);
  CsvTable t({"size", "count", "sum_exp_a", "sum_exp_kappa0", "path_bound"}, c.hash);
  std::optional<PlotData> plot;
  if (c.plot_path) plot.emplace(c.hash);
  for (const auto& row : r.rows) {
    t.add_numbers({static_cast<double>(row.size), static_cast<double>(row.count), row.sum_exp_a, row.sum_exp_kappa,
                   row.path_bound});
    if (plot) plot->add("count", row.size, static_cast<double>(row.count));
  }
  emit(t, a.emit);
  if (plot) plot->write(*c.plot_path);
  std::cerr << "checked " << v.checked << " polymers; violations ninety=" << v.ninety << " salsa=" << v.salsa
            << " clams=" << v.clams << " path=" << v.path_count << "; K0=" << format_double(r.K0) << '\n';
  const bool ok = v.ninety + v.salsa + v.clams + v.path_count == 0 && r.counts_within_bound;
  return ok ? 0 : 4;
}

int cluster(const Common& c, const ClusterArgs& a) {
  const Json& b = block(c, "cluster");
  reject_unknown_keys(b, {"n_max"}, "cluster");
  const int n_max = get_int(b, "n_max", a.n_max, 1, 32);
  Caps caps;
  caps.max_polymers = get_int(block(c, "caps"), "max_polymers", caps.max_polymers, 1, 30);
  caps.max_grid = static_cast<std::int64_t>(
      get_double(block(c, "caps"), "max_grid", static_cast<double>(caps.max_grid), 1.0, 1e12));
  ClusterInstance inst = cluster_from_json(load_json(a.input), load_json(a.measure));
  ClusterResult res = run_cluster_expansion(inst, n_max, caps);
  Json out = to_json(res);
  out["config_hash"] = c.hash;
  int code = 0;
  if (a.oracle) {
    BruteForceResult bf = brute_force_log_partition(inst, caps);
    double err = 0.0;
    for (const auto& [Y, h] : bf.H_exact) {
      auto it = res.H_sharp.find(Y);
      err = std::max(err, std::abs((it == res.H_sharp.end() ? 0.0 : it->second) - h));
    }
    const double tol = tolerance(c, "cluster", 1e-10);
    out["oracle"] = Json{{"log_xi", bf.log_xi},
                         {"total_error", std::abs(bf.log_xi - res.total)},
                         {"max_amplitude_error", err},
                         {"tolerance", tol},
                         {"tail_reported", res.tail.reported}};
    if (std::abs(bf.log_xi - res.total) > tol + res.tail.reported) code = 4;
  }
  if (a.out.empty() || a.out == "-")
    std::cout << out.dump(2) << '\n';
  else
    save_json(out, a.out);
  if (code) std::cerr << "check failure: cluster total differs from the brute-force oracle\n";
  return code;
}

int step(const Common& c, const StepArgs& a) {
  reject_unknown_keys(block(c, "step"), {}, "step");
  FlowState s = state_from_json(a.state.empty() ? Json::object() : load_json(a.state));
  StepControls ctl = controls_from_json(a.controls.empty() ? Json::object() : load_json(a.controls));
  StepResult r = rg_step(s, ctl);
  Json out{{"config_hash", c.hash}, {"pieces", to_json(r.pieces)}, {"report", to_json(r.report)}};
  const double tol = tolerance(c, "xi", 1e-7);
  const StepReport& rep = r.report;
  const bool ok = rep.xi_error <= tol && rep.audit_change_of_variables <= 1e-9 && rep.audit_w_substitution <= 1e-9 &&
                  rep.audit_assembly <= 1e-9 && rep.audit_final_form <= 1e-9 && rep.evenness_error <= 1e-12 &&
                  rep.renormalization_residual <= 1e-10 && rep.chi_ok && rep.epsilon0_ok;
  out["checks_passed"] = ok;
  if (a.report.empty() || a.report == "-")
    std::cout << out.dump(2) << '\n';
  else
    save_json(out, a.report);
  if (c.plot_path) {
    PlotData plot(c.hash);
    for (const auto& bnd : rep.bounds) plot.add(bnd.name, rep.lambda_k, bnd.prefactor);
    plot.write(*c.plot_path);
  }
  if (!ok) std::cerr << "check failure: step audit outside tolerance\n" << to_json(rep).dump(2) << '\n';
  return ok ? 0 : 4;
}

int flow(const Common& c, const FlowArgs& a) {
  Json b = block(c, "flow");
  reject_unknown_keys(b, {"d", "L", "K", "Delta", "lambda", "beta", "eps", "surrogate", "unit_side", "tol", "max_iter"},
                      "flow");
  Json fp = Json::object();
  for (const char* key : {"d", "L", "K", "Delta", "lambda", "beta", "eps"})
    if (b.contains(key)) fp[key] = b[key];
  FlowParams p = flow_params_from_json(fp);
  if (a.K) p.K = *a.K;
  if (a.L) p.L = *a.L;
  if (a.Delta) p.Delta = *a.Delta;
  if (a.lambda) p.lambda = *a.lambda;
  if (p.K < 1 || p.L < 2 || p.Delta < 0 || !(p.lambda > 0.0)) throw ConfigError("invalid flow parameters");
  const double tol = get_double(b, "tol", 1e-15, 0.0, 1.0);
  const int max_iter = get_int(b, "max_iter", 200, 1, 100000);
  StepMaps maps;
  if (a.maps == "pipeline") {
    p.d = 1;
    StepControls ctl;
    ctl.seed = c.seed;
    maps = pipeline_maps(1, p.L, get_int(b, "unit_side", 6, 1, 64), ctl);
  } else if (a.maps == "surrogate") {
    maps = surrogate_maps(surrogate_from_json(b.value("surrogate", Json::object())));
  } else {
    Json sj = load_json(a.maps);
    maps = surrogate_maps(surrogate_from_json(sj));
  }
  FixedPoint fx = solve_fixed_point(maps, p, tol, max_iter);
  VacuumReport vac = vacuum_energy_backfill(fx.seq, maps, p);
  GrowthReport gr = growth_audit(fx.seq, maps, p);
  CsvTable t({"k", "lambda_k", "mu_k", "epsilon_k", "E_norm", "mu_ratio", "E_ratio", "epsilon_envelope"}, c.hash);
  std::optional<PlotData> plot;
  if (c.plot_path) plot.emplace(c.hash);
  for (int k = 0; k <= p.K; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    t.add_numbers({static_cast<double>(k), fx.seq.lambda[ku], fx.seq.mu[ku], vac.epsilon[ku], maps.e_norm(fx.seq.E[ku]),
                   gr.mu_ratio[ku], gr.E_ratio[ku], vac.envelope[ku]});
    if (plot) {
      plot->add("mu_ratio", k, gr.mu_ratio[ku]);
      plot->add("E_ratio", k, gr.E_ratio[ku]);
      plot->add("epsilon", k, vac.epsilon[ku]);
    }
  }
  emit(t, a.out);
  if (plot) plot->write(*c.plot_path);
  const auto& r = fx.report;
  std::cerr << "iterations=" << r.iterations << " max_ratio=" << format_double(r.max_ratio)
            << " residual=" << format_double(r.residual) << " norm=" << format_double(r.norm)
            << " growth=" << format_double(gr.max_ratio) << " vacuum_ratio=" << format_double(vac.max_ratio) << '\n';
  const bool ok = r.converged && r.residual < 1e-12 && gr.ok && vac.ok;
  if (!ok) std::cerr << "check failure: flow solve outside tolerance\n";
  return ok ? 0 : 4;
}

}  // namespace blockrg::cli
