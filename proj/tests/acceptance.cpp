// Acceptance run: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "blockrg/averaging.hpp"
#include "blockrg/cluster.hpp"
#include "blockrg/flow.hpp"
#include "blockrg/functional.hpp"
#include "blockrg/gaussian_flow.hpp"
#include "blockrg/greens.hpp"
#include "blockrg/linalg.hpp"
#include "blockrg/polymer.hpp"
#include "blockrg/rg_step.hpp"

using namespace blockrg;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += " FAILED[" + what + "]";
    }
  }
  void note(const std::string& s) { detail += " " + s; }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int failures = 0;

void run(int id, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string(" exception: ") + e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(s <= budget_s, "time " + fmt(s) + "s > " + fmt(budget_s) + "s");
  if (!o.pass) ++failures;
  std::printf("criterion %d: %s (%.2fs)%s\n", id, o.pass ? "PASS" : "FAIL", s, o.detail.c_str());
  std::fflush(stdout);
}

GaussianLevel level_one(int d, Index fine_side) {
  GaussParams p;
  p.L = 3;
  p.a = 1.0;
  p.k = 1;
  return GaussianLevel(TorusLattice(d, 3, -1, fine_side), p);
}

Outcome averaging() {
  Outcome o;
  for (int d = 1; d <= 3; ++d) {
    AveragingReport r = averaging_identity_check(d, 3, 2, 1, 1, d == 3 ? 2 : 3, 10, 17);
    o.require(r.qqt <= 1e-13, "QQ^T d=" + std::to_string(d));
    o.require(r.projection <= 1e-13, "projection d=" + std::to_string(d));
    o.require(r.adjoint <= 1e-13, "adjoint d=" + std::to_string(d));
    o.require(r.scaling <= 1e-13, "scaling d=" + std::to_string(d));
    o.require(r.composition <= 1e-13, "composition d=" + std::to_string(d));
    o.note("d=" + std::to_string(d) + ":" + fmt(r.max()));
  }
  return o;
}

Outcome gaussian_identities() {
  Outcome o;
  double ak = a_k_closed(1.0, 3, 1), worst = 0.0;
  for (int k = 1; k < 64; ++k) {
    ak = a_k_step(ak, 1.0, 3);
    worst = std::max(worst, std::abs(ak - a_k_closed(1.0, 3, k + 1)) / ak);
  }
  o.require(worst <= 1e-13, "a_k recursion");
  o.note("a_k:" + fmt(worst));
  for (int d = 1; d <= 2; ++d) {
    IdentityReport r = free_step_identity_check(level_one(d, 27), 100, 5);
    o.require(r.fifty <= 1e-9, "minimum identity d=" + std::to_string(d));
    o.require(r.eighty <= 1e-9, "expansion identity d=" + std::to_string(d));
    o.require(r.delta_form <= 1e-9, "quadratic form d=" + std::to_string(d));
    o.note("d=" + std::to_string(d) + ":" + fmt(std::max({r.fifty, r.eighty, r.delta_form})));
  }
  return o;
}

Outcome resolvent() {
  Outcome o;
  // d = 1 with nine unit sites; d = 2 with 3 x 3 coarse sites.
  for (int d = 1; d <= 2; ++d) {
    GaussianLevel g = level_one(d, 27);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) worst = std::max(worst, resolvent_identity_check(g, 0.05 + 4.95 * i / 19.0).rel_error);
    o.require(worst < 1e-8, "resolvent d=" + std::to_string(d));
    o.note("d=" + std::to_string(d) + ":" + fmt(worst));
  }
  return o;
}

Outcome random_walk() {
  Outcome o;
  {
    GaussianLevel g = level_one(1, 3 * 27);
    PartitionOfUnity pou(g.fine(), 2);
    RandomWalk rw(pou, gk_potential(g));
    WalkResult r = rw.expand(8);
    const double err = max_abs_diff(r.sum, g.G());
    o.require(r.diag.max_ratio <= 0.5, "ratio " + fmt(r.diag.max_ratio));
    o.require(err < 1e-6, "error " + fmt(err));
    o.note("ratio:" + fmt(r.diag.max_ratio) + " error:" + fmt(err));
  }
  {
    // Twelve cubes of side 9; s = 0 on cubes 0, 1, 6, 7 separates 2..5 from 8..11.
    GaussianLevel g = level_one(1, 12 * 27);
    PartitionOfUnity pou(g.fine(), 2);
    RandomWalk rw(pou, gk_potential(g));
    std::uint64_t on = 0;
    for (int c = 0; c < 12; ++c)
      if (c != 0 && c != 1 && c != 6 && c != 7) on |= std::uint64_t{1} << c;
    WalkResult r = rw.expand_corner(8, on);
    const CubeLayout& lay = pou.layout();
    double off = 0.0;
    for (Index x = 0; x < g.fine().size(); ++x)
      for (Index y = 0; y < g.fine().size(); ++y) {
        const Index cx = lay.cube_of(x), cy = lay.cube_of(y);
        if (cx >= 2 && cx <= 5 && cy >= 8 && cy <= 11) off = std::max(off, std::abs(r.sum(x, y)));
      }
    o.require(off < 1e-12, "off-block " + fmt(off));
    o.note("off-block:" + fmt(off));
  }
  return o;
}

Outcome polymers() {
  Outcome o;
  GeometryViolations v = polymer_geometry_audit(2, 6, 6, 3);
  o.require(v.checked > 0, "nothing checked");
  o.require(v.ninety == 0, "reblock tree bound");
  o.require(v.salsa == 0, "superadditivity");
  o.require(v.clams == 0, "sub-polymer sum");
  o.require(v.path_count == 0, "path-count majorant");
  CountingReport r = counting_bounds_report(2, 6, 4.0, 3.0);
  o.require(r.counts_within_bound, "count bound");
  o.note("checked:" + std::to_string(v.checked));
  return o;
}

ClusterInstance random_cluster_instance(std::mt19937& rng) {
  std::uniform_int_distribution<int> ncell(2, 6), nsite(1, 2), npoly(1, 5), atoms(2, 3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ClusterInstance inst;
  const int nc = ncell(rng);
  for (int c = 0; c < nc; ++c) {
    std::vector<int> sites;
    for (int s = nsite(rng); s > 0 && inst.n_sites < 12; --s) sites.push_back(inst.n_sites++);
    if (sites.empty()) sites.push_back(inst.n_sites++);
    inst.cell_sites.push_back(sites);
  }
  if (atoms(rng) == 2) {
    const double x = 0.5 + std::abs(u(rng));
    inst.measure = UltralocalMeasure::atoms({-x, x}, {0.5, 0.5});
  } else {
    const double w = 0.25 + 0.25 * std::abs(u(rng));
    inst.measure = UltralocalMeasure::atoms({-1.0, 0.0, 1.0}, {0.5 * (1 - w), w, 0.5 * (1 - w)});
  }
  const int np = npoly(rng);
  std::uniform_int_distribution<int> start(0, nc - 1), len(1, 3);
  for (int i = 0; i < np; ++i) {
    const int s0 = start(rng);
    CellMask m = 0;
    for (int j = 0, n = len(rng); j < n; ++j) m |= CellMask{1} << ((s0 + j) % nc);
    const double a = 0.02 * u(rng), b = 0.02 * u(rng), c = 0.02 * u(rng);
    const std::vector<int> sites = inst.sites_of(m);
    inst.polymers.push_back({m, [a, b, c, sites](const double* W) {
                               double sq = 0.0, prod = 1.0;
                               for (int x : sites) {
                                 sq += W[x] * W[x];
                                 prod *= W[x];
                               }
                               return a + b * sq + c * prod;
                             }});
  }
  return inst;
}

Outcome cluster() {
  Outcome o;
  std::mt19937 rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 30; ++i) {
    const ClusterInstance inst = random_cluster_instance(rng);
    const ClusterResult r = run_cluster_expansion(inst, 12);
    const double bf = brute_force_log_xi(inst, (CellMask{1} << inst.n_cells()) - 1);
    worst = std::max(worst, std::abs(r.total - bf));
  }
  o.require(worst < 1e-10, "brute force " + fmt(worst));
  ClusterInstance one;
  one.cell_sites = {{0}};
  one.n_sites = 1;
  one.measure = UltralocalMeasure::atoms({-1.0, 0.0, 1.0}, {0.25, 0.5, 0.25});
  one.polymers.push_back({1, [](const double* W) { return 0.3 * W[0] * W[0] - 0.1; }});
  const ClusterResult r1 = run_cluster_expansion(one, 12);
  // K# = 1/2 (e^{0.2} - 1) + 1/2 (e^{-0.1} - 1).
  const double K = 0.5 * std::expm1(0.2) + 0.5 * std::expm1(-0.1);
  const double single = std::abs(r1.total - std::log1p(K));
  o.require(single < 1e-10, "single polymer " + fmt(single));
  o.note("instances:30 max:" + fmt(worst) + " single:" + fmt(single));
  return o;
}

LocalFunctional random_polynomial(const TorusLattice& lat, std::mt19937& rng, bool invariant) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LocalFunctional E(lat, 0);
  const CubeTorus& t = E.cube_torus();
  const double c0 = u(rng), c2 = u(rng), c4 = u(rng), g2 = u(rng), p2 = 0.3 * u(rng), pg = 0.2 * u(rng);
  for (Index c = 0; c < t.count(); ++c) {
    const double s = invariant ? 1.0 : 1.0 + 0.5 * u(rng);
    Polymer X = E.polymer({c});
    E.add_monomial(X, s * c0, 0);
    E.add_monomial(X, s * c2, 2);
    E.add_monomial(X, s * c4, 4);
    E.add_monomial(X, s * g2, 0, 2, 0);
    for (int mu = 0; mu < lat.d(); ++mu) {
      Coord x = t.coords(c);
      x[static_cast<std::size_t>(mu)] += 1;
      Polymer Y = E.polymer({c, t.index(x)});
      E.add_monomial(Y, s * p2, 2);
      E.add_monomial(Y, s * pg, 1, 1, mu);
    }
  }
  return E;
}

Outcome normalization() {
  Outcome o;
  std::mt19937 rng(99);
  std::normal_distribution<double> n(0.0, 1.0);
  double reextract = 0.0, spread = 0.0, quad = 0.0;
  for (int i = 0; i < 6; ++i) {
    const TorusLattice lat = i % 2 ? TorusLattice(2, 3, -1, 27) : TorusLattice(1, 3, -1, 27);
    const LocalFunctional E = random_polynomial(lat, rng, i < 4);
    NormalizationResult r = normalize(E, 3);
    if (i < 4) spread = std::max({spread, r.epsilon_spread, r.mu_spread});
    for (const ExtractRecord& rec : normalize(r.remainder, 3).records) {
      reextract = std::max({reextract, std::abs(rec.alpha0), std::abs(rec.alpha2)});
      for (int mu = 0; mu < lat.d(); ++mu) reextract = std::max(reextract, std::abs(rec.alpha2mu[static_cast<std::size_t>(mu)]));
    }
  }
  for (int d = 1; d <= 2; ++d) {
    LocalFunctional Q(TorusLattice(d, 3, -1, 27), 0);
    for (Index c = 0; c < Q.cube_torus().count(); ++c) {
      Q.add_monomial(Q.polymer({c}), 0.7, 2);
      Q.add_monomial(Q.polymer({c}), -0.4, 0);
    }
    NormalizationResult r = normalize(Q, 3);
    Field phi(Q.lattice());
    for (Index x = 0; x < phi.size(); ++x) phi[x] = n(rng);
    for (const auto& [X, term] : r.remainder.terms()) quad = std::max(quad, std::abs(r.remainder.evaluate(X, phi)));
  }
  o.require(reextract <= 1e-10, "re-extraction " + fmt(reextract));
  o.require(spread <= 1e-10, "base-cube spread " + fmt(spread));
  o.require(quad <= 1e-13, "quadratic remainder " + fmt(quad));
  o.note("re-extract:" + fmt(reextract) + " spread:" + fmt(spread) + " quadratic:" + fmt(quad));
  return o;
}

double step_eps0 = -1.0, step_eps0_bound = 0.0;

Outcome rg_step_micro() {
  Outcome o;
  const double lam = 1e-3;
  StepControls c;
  StepResult r = rg_step(micro_state(1, 3, 6, 1, 0, lam), c);
  const StepReport& rep = r.report;
  // Quartic coupling scales by L^{4-d}: L^3 in d = 1.
  o.require(rep.lambda_next == 27.0 * lam, "lambda_{k+1}");
  o.require(rep.evenness_error <= 1e-12, "evenness " + fmt(rep.evenness_error));
  o.require(rep.renormalization_residual <= 1e-10, "normalization " + fmt(rep.renormalization_residual));
  o.require(rep.xi_error < 1e-7, "Xi' " + fmt(rep.xi_error));
  for (const BoundCheck& b : rep.bounds) o.require(b.prefactor <= 1.0, b.name + " envelope");
  PowerStructureReport ps = power_structure(1, 3, 6, {1e-3, 1e-4, 1e-5}, c);
  o.require(ps.mu_ok, "mu* power structure");
  o.require(ps.E_ok, "E* power structure");
  step_eps0 = rep.epsilon0;
  step_eps0_bound = rep.epsilon0_bound;
  double mu_pref = 0.0, E_pref = 0.0;
  for (const BoundCheck& b : rep.bounds) {
    if (b.name == "mu*") mu_pref = b.prefactor;
    if (b.name == "E*") E_pref = b.prefactor;
  }
  o.note("xi:" + fmt(rep.xi_error) + " even:" + fmt(rep.evenness_error) + " mu*-prefactor:" + fmt(mu_pref) +
         " E*-prefactor:" + fmt(E_pref));
  return o;
}

Outcome flow_solver() {
  Outcome o;
  FlowParams p;
  p.K = 20;
  p.L = 3;
  const StepMaps m = surrogate_maps(SurrogateParams{});
  FixedPoint fx = solve_fixed_point(m, p);
  const ConvergenceReport& r = fx.report;
  o.require(r.converged, "converged");
  o.require(r.max_ratio <= 0.5, "contraction " + fmt(r.max_ratio));
  o.require(r.residual < 1e-12, "residual " + fmt(r.residual));
  GrowthReport g = growth_audit(fx.seq, m, p);
  o.require(g.boundary_exact, "boundary conditions");
  o.require(g.max_ratio <= 1.0, "growth " + fmt(g.max_ratio));
  VacuumReport v = vacuum_energy_backfill(fx.seq, m, p);
  o.require(v.ok, "vacuum envelope " + fmt(v.max_ratio));
  const std::vector<double> cf = linear_closed_form(0.1, p);
  FixedPoint lf = solve_fixed_point(linear_maps(0.1), p);
  double lin = 0.0;
  for (int k = 0; k <= p.K; ++k)
    lin = std::max(lin, std::abs(cf[static_cast<std::size_t>(k)] - lf.seq.mu[static_cast<std::size_t>(k)]));
  o.require(lin < 1e-12, "linear closed form " + fmt(lin));
  o.note("ratio:" + fmt(r.max_ratio) + " residual:" + fmt(r.residual) + " growth:" + fmt(g.max_ratio) +
         " linear:" + fmt(lin));
  return o;
}

Outcome decay() {
  Outcome o;
  for (const DecaySeries& s : greens_decay_suite(1, 3, 1, 1, 27, 1.0, 0.5, 5)) {
    o.require(s.fit.gamma > 0.0, s.name + " rate");
    o.note(s.name + ":" + fmt(s.fit.gamma));
  }
  if (step_eps0 < 0.0) {
    StepControls c;
    FlowState s = micro_state(1, 3, 6, 1, 0, 1e-3);
    GaussianLevel g(s.lattice(), s.gauss);
    step_eps0 = fluctuation_integral(s, g, Field(s.lattice()), c, false).epsilon0;
    step_eps0_bound = epsilon0(c, 1e-3) * c.eps0_margin;
  }
  o.require(step_eps0 <= step_eps0_bound, "epsilon0");
  o.note("eps0:" + fmt(step_eps0) + "<=" + fmt(step_eps0_bound));
  return o;
}

}  // namespace

int main() {
  run(1, 1.0, averaging);
  run(2, 10.0, gaussian_identities);
  run(3, 30.0, resolvent);
  run(4, 60.0, random_walk);
  run(5, 60.0, polymers);
  run(6, 120.0, cluster);
  run(7, 5.0, normalization);
  run(8, 600.0, rg_step_micro);
  run(9, 10.0, flow_solver);
  run(10, 60.0, decay);
  std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
