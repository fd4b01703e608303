#include "blockrg/rg_step.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <mutex>
#include <random>

#include "blockrg/error.hpp"
#include "blockrg/linalg.hpp"

namespace blockrg {

FlowState micro_state(int d, int L, Index unit_side, int k, int m, double lambda, double mu, double epsilon, double a,
                      double mu_bar_k) {
  if (unit_side % ipow(L, m + 1) != 0) throw ConfigError("unit side must be a multiple of L^{m+1}");
  TorusLattice fine(d, L, -k, unit_side * ipow(L, k));
  return FlowState(GaussParams{L, a, k, mu_bar_k}, epsilon, mu, lambda, LocalFunctional(fine, m));
}

FieldDomainSpec StepControls::spec(double lambda) const {
  FieldDomainSpec s;
  s.lambda = lambda;
  s.eps = eps;
  s.alpha = alpha;
  s.rho = rho;
  s.p = p;
  s.p0 = p0;
  return s;
}

double potential_term(const FlowState& s, const Polymer& cube, const Field& phi) {
  if (cube.size() != 1) throw ConfigError("potential_term takes a single cube");
  const auto sites = s.E.sites_of(cube);
  const double w = s.lattice().site_weight();
  double sq = 0.0, qu = 0.0;
  for (Index x : *sites) {
    double v = phi[x] * phi[x];
    sq += v;
    qu += v * v;
  }
  return s.epsilon * w * static_cast<double>(sites->size()) + 0.5 * s.mu * w * sq + 0.25 * s.lambda * w * qu;
}

double potential_total(const FlowState& s, const Field& phi) {
  double t = 0.0;
  for (Index c = 0; c < s.E.cube_torus().count(); ++c) t += potential_term(s, s.E.polymer({c}), phi);
  return t;
}

LocalFunctional e_plus(const FlowState& s) {
  LocalFunctional out = s.E;
  for (Index c = 0; c < s.E.cube_torus().count(); ++c) {
    Polymer X = out.polymer({c});
    if (s.epsilon != 0.0) out.add_monomial(X, -s.epsilon, 0);
    if (s.mu != 0.0) out.add_monomial(X, -0.5 * s.mu, 2);
    if (s.lambda != 0.0) out.add_monomial(X, -0.25 * s.lambda, 4);
  }
  return out;
}

double delta_eplus(const LocalFunctional& Eplus, const Polymer& X, const Field& phi, const Field& Wcal) {
  return Eplus.evaluate(X, phi + Wcal) - Eplus.evaluate(X, phi);
}

namespace {

CellMask mask_of(const std::vector<Index>& cubes) {
  CellMask m = 0;
  for (Index c : cubes) m |= CellMask{1} << c;
  return m;
}

std::vector<Index> cubes_of(CellMask m) {
  std::vector<Index> c;
  for (int i = 0; i < 32; ++i)
    if (m >> i & 1u) c.push_back(i);
  return c;
}

// Component label per cell of T, -1 outside T.
std::vector<int> components(const CubeTorus& t, CellMask T) {
  std::vector<int> comp(static_cast<std::size_t>(t.count()), -1);
  int next = 0;
  for (Index c = 0; c < t.count(); ++c) {
    if (!(T >> c & 1u) || comp[static_cast<std::size_t>(c)] != -1) continue;
    std::vector<Index> stack{c};
    comp[static_cast<std::size_t>(c)] = next;
    while (!stack.empty()) {
      Index u = stack.back();
      stack.pop_back();
      for (Index v : t.face_neighbors(u))
        if ((T >> v & 1u) && comp[static_cast<std::size_t>(v)] == -1) {
          comp[static_cast<std::size_t>(v)] = next;
          stack.push_back(v);
        }
    }
    ++next;
  }
  return comp;
}

bool mask_connected(const CubeTorus& t, CellMask m) { return m != 0 && is_connected(t, cubes_of(m)); }

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

Localization::Localization(const FlowState& s, const GaussianLevel& g, const Field& phi)
    : Eplus_(e_plus(s)), phi_(phi), torus_(LocalFunctional(s.lattice(), s.E.cube_exp() + 1).cube_torus()) {
  const TorusLattice& fine = s.lattice();
  if (phi.lattice() != fine) throw ConfigError("phi must live on the level-k lattice");
  const LocalFunctional big(fine, s.E.cube_exp() + 1);
  n_cells_ = static_cast<int>(torus_.count());
  if (n_cells_ > 10) throw CapExceeded("localization is limited to 10 cubes of side LM");
  fine_cell_.resize(static_cast<std::size_t>(fine.size()));
  for (Index x = 0; x < fine.size(); ++x) fine_cell_[static_cast<std::size_t>(x)] = static_cast<int>(big.cubes().block_of(x));
  n_w_ = static_cast<int>(g.unit().size());
  cell_sites_.assign(static_cast<std::size_t>(n_cells_), {});
  std::vector<int> w_cell(static_cast<std::size_t>(n_w_));
  for (Index y = 0; y < n_w_; ++y) {
    const auto& fs = g.Qk().sites_of(y);
    int c = fine_cell_[static_cast<std::size_t>(fs.front())];
    for (Index x : fs)
      if (fine_cell_[static_cast<std::size_t>(x)] != c) throw NumericalError("unit block straddles two cubes");
    w_cell[static_cast<std::size_t>(y)] = c;
    cell_sites_[static_cast<std::size_t>(c)].push_back(static_cast<int>(y));
  }
  full_push_ = g.fluct_push();
  const std::size_t nm = std::size_t{1} << n_cells_;
  push_.assign(nm, Matrix());
  for (std::size_t T = 0; T < nm; ++T) {
    auto comp = components(torus_, static_cast<CellMask>(T));
    Matrix M = Matrix::Zero(full_push_.rows(), full_push_.cols());
    for (Index x = 0; x < M.rows(); ++x) {
      int cx = comp[static_cast<std::size_t>(fine_cell_[static_cast<std::size_t>(x)])];
      if (cx < 0) continue;
      for (Index y = 0; y < M.cols(); ++y)
        if (comp[static_cast<std::size_t>(w_cell[static_cast<std::size_t>(y)])] == cx) M(x, y) = full_push_(x, y);
    }
    push_[T] = std::move(M);
  }
  std::map<CellMask, Block> by_y;
  for (const auto& [X, t] : Eplus_.terms()) {
    CellMask Y = 0;
    const SiteList sites = Eplus_.sites_of(X);
    for (Index x : *sites) Y |= CellMask{1} << fine_cell_[static_cast<std::size_t>(x)];
    if (mask_of(reblock(X, s.L()).cubes()) != Y) throw NumericalError("reblocking disagrees with the cube map");
    Block& b = by_y[Y];
    b.Y = Y;
    b.X.push_back(X);
    b.base.push_back(Eplus_.evaluate(X, phi_));
  }
  for (auto& [Y, b] : by_y) {
    for (Index x = 0; x < fine.size(); ++x)
      if (Y >> fine_cell_[static_cast<std::size_t>(x)] & 1u) b.sites.push_back(x);
    blocks_.push_back(std::move(b));
  }
}

std::vector<CellMask> Localization::blocks() const {
  std::vector<CellMask> out;
  for (const auto& b : blocks_) out.push_back(b.Y);
  return out;
}

const Localization::Block* Localization::block(CellMask Y) const {
  for (const auto& b : blocks_)
    if (b.Y == Y) return &b;
  return nullptr;
}

double Localization::reblocked(CellMask Y, CellMask T, const double* W) const {
  const Block* b = block(Y);
  if (!b) return 0.0;
  Eigen::Map<const Vector> w(W, n_w_);
  const Matrix& M = push_[T];
  Field f = phi_;
  for (Index x : b->sites) f[x] += M.row(x).dot(w);
  double s = 0.0;
  for (std::size_t i = 0; i < b->X.size(); ++i) s += Eplus_.evaluate(b->X[i], f) - b->base[i];
  return s;
}

double Localization::piece(CellMask Y, CellMask Z, const double* W) const {
  if ((Y & ~Z) != 0) throw ConfigError("piece needs Y inside Z");
  const CellMask D = Z & ~Y;
  double s = 0.0;
  for (CellMask S = D;; S = (S - 1) & D) {
    const int sign = (std::popcount(D ^ S) & 1) ? -1 : 1;
    s += sign * reblocked(Y, Y | S, W);
    if (S == 0) break;
  }
  return s;
}

double Localization::local(CellMask Z, const double* W) const {
  double s = 0.0;
  for (const auto& b : blocks_)
    if ((b.Y & ~Z) == 0) s += piece(b.Y, Z, W);
  return s;
}

double Localization::total(const double* W) const {
  Eigen::Map<const Vector> w(W, n_w_);
  Field Wcal(phi_.lattice(), full_push_ * w);
  double s = 0.0;
  for (const auto& [X, t] : Eplus_.terms()) s += delta_eplus(Eplus_, X, phi_, Wcal);
  return s;
}

std::vector<CellMask> Localization::supports(int max_cells) const {
  std::vector<CellMask> out;
  const CellMask nm = CellMask{1} << n_cells_;
  for (CellMask Z = 1; Z < nm; ++Z) {
    if (std::popcount(Z) > max_cells || !mask_connected(torus_, Z)) continue;
    bool holds = false;
    for (const auto& b : blocks_) holds = holds || (b.Y & ~Z) == 0;
    if (holds) out.push_back(Z);
  }
  return out;
}

double epsilon0(const StepControls& c, double lambda) {
  return -std::log1p(-gaussian_tail_mass(c.spec(lambda).p0_k()));
}

namespace {

ClusterInstance make_instance(const Localization& loc, const StepControls& c, double lambda) {
  ClusterInstance inst;
  inst.cell_sites = loc.cell_sites();
  inst.n_sites = loc.n_w();
  inst.measure = UltralocalMeasure::truncated_gaussian(c.quad_nodes, c.spec(lambda).p0_k());
  for (CellMask Z : loc.supports(loc.n_cells()))
    inst.polymers.push_back({Z, [&loc, Z](const double* W) { return loc.local(Z, W); }});
  return inst;
}

double direct_log_xi(const Localization& loc, const ClusterInstance& inst, const Caps& caps) {
  ClusterInstance whole;
  whole.cell_sites = inst.cell_sites;
  whole.n_sites = inst.n_sites;
  whole.measure = inst.measure;
  const CellMask all = (CellMask{1} << inst.n_cells()) - 1;
  whole.polymers.push_back({all, [&loc](const double* W) { return loc.total(W); }});
  return brute_force_log_xi(whole, all, caps);
}

}  // namespace

FluctuationResult fluctuation_integral(const FlowState& s, const GaussianLevel& g, const Field& phi,
                                       const StepControls& c, bool direct_check) {
  Localization loc(s, g, phi);
  ClusterInstance inst = make_instance(loc, c, s.lambda);
  FluctuationResult r;
  r.epsilon0 = epsilon0(c, s.lambda);
  if (inst.polymers.empty()) return r;
  r.cluster = run_cluster_expansion(inst, c.n_max, c.caps);
  for (const auto& [Y, h] : r.cluster.H_sharp) {
    if (mask_connected(loc.torus(), Y))
      r.E_sharp[Y] = h;
    else
      r.disconnected[Y] = h;
  }
  r.log_xi_cluster = r.cluster.total;
  if (direct_check) r.log_xi_direct = direct_log_xi(loc, inst, c.caps);
  return r;
}

namespace {

struct SharpContext {
  SharpContext(const FlowState& s, const StepControls& c) : state(s), controls(c), g(s.lattice(), s.gauss) {}
  FlowState state;
  StepControls controls;
  GaussianLevel g;
  std::mutex m;
  std::map<std::vector<double>, std::map<CellMask, double>> cache;

  double value(CellMask Y, const Field& phi) {
    std::vector<double> key(phi.values().data(), phi.values().data() + phi.size());
    {
      std::lock_guard<std::mutex> lk(m);
      auto it = cache.find(key);
      if (it != cache.end()) {
        auto jt = it->second.find(Y);
        return jt == it->second.end() ? 0.0 : jt->second;
      }
    }
    auto r = fluctuation_integral(state, g, phi, controls, false);
    std::lock_guard<std::mutex> lk(m);
    if (cache.size() > 4096) cache.clear();
    auto& slot = cache[key];
    slot = r.E_sharp;
    auto jt = slot.find(Y);
    return jt == slot.end() ? 0.0 : jt->second;
  }
};

}  // namespace

LocalFunctional e_sharp_functional(const FlowState& s, const StepControls& c) {
  auto ctx = std::make_shared<SharpContext>(s, c);
  LocalFunctional out(s.lattice(), s.E.cube_exp() + 1);
  const CubeTorus& t = out.cube_torus();
  if (t.count() > 10) throw CapExceeded("E# is limited to 10 cubes of side LM");
  for (CellMask Y = 1; Y < (CellMask{1} << t.count()); ++Y) {
    if (!mask_connected(t, Y)) continue;
    Polymer X = out.polymer(cubes_of(Y));
    OpaqueTerm term;
    term.eval = [ctx, Y](const Field& phi) { return ctx->value(Y, phi); };
    term.sites = out.sites_of(X);
    out.add_opaque(X, std::move(term));
  }
  return out;
}

StepPieces step_pieces(const FlowState& s, const StepControls& c) {
  const int L = s.L();
  const int d = s.d();
  const double Ld = dpow(L, d);
  NormalizationResult n1 = normalize(scale_down(reblock(s.E, L)), L);
  NormalizationResult n2 = normalize(scale_down(e_sharp_functional(s, c)), L);
  StepPieces p(n1.remainder, n2.remainder, n1.remainder + n2.remainder);
  p.L1E = n1.epsilon;
  p.L2E = n1.mu;
  p.epsilon0 = epsilon0(c, s.lambda);
  p.epsilon_star = Ld * p.epsilon0 + n2.epsilon;
  p.mu_star = n2.mu;
  p.epsilon_next = Ld * s.epsilon + p.L1E + p.epsilon_star;
  p.mu_next = static_cast<double>(L) * L * s.mu + p.L2E + p.mu_star;
  p.lambda_next = lambda_scale_factor(L, d) * s.lambda;
  p.gauss_next = s.gauss;
  p.gauss_next.k += 1;
  p.gauss_next.mu_bar_k = s.gauss.mu_bar_k * L * L;
  return p;
}

namespace {

double functional_norm(const LocalFunctional& E, const StepControls& c, double lambda) {
  const FieldDomainSpec spec = c.spec(lambda);
  return global_norm(E, spec, c.kappa, E.polynomial() ? Certificate::upper : Certificate::lower, c.norm_samples, c.seed)
      .value;
}

BoundCheck bound(std::string name, double value, double envelope) {
  BoundCheck b{std::move(name), value, envelope, 0.0};
  b.prefactor = envelope > 0.0 ? value / envelope : (value == 0.0 ? 0.0 : INFINITY);
  return b;
}

Field random_field(const TorusLattice& lat, double amp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Field f(lat);
  for (Index x = 0; x < lat.size(); ++x) f[x] = amp * u(rng);
  return f;
}

double sup_gradient(const Field& f) {
  double s = 0.0;
  for (int mu = 0; mu < f.lattice().d(); ++mu) s = std::max(s, sup_norm(forward_derivative(f, mu)));
  return s;
}

void check_hypotheses(const FlowState& s, const StepControls& c, double mu_frac, double E_frac, double& E_norm) {
  if (!(s.lambda >= 0.0) || s.lambda > c.lambda_threshold)
    throw DomainError("lambda_k is above the configured threshold");
  if (std::abs(s.mu) > mu_frac * std::sqrt(s.lambda)) throw DomainError("|mu_k| exceeds the allowed fraction of lambda^{1/2}");
  E_norm = functional_norm(s.E, c, s.lambda);
  if (E_norm > E_frac) throw DomainError("||E_k|| exceeds the allowed bound");
}

}  // namespace

StepResult rg_step(const FlowState& s, const StepControls& c) {
  const auto t0 = std::chrono::steady_clock::now();
  double E_norm = 0.0;
  check_hypotheses(s, c, 1.0, 1.0, E_norm);
  const int L = s.L();
  const int d = s.d();
  const double Ld = dpow(L, d);
  const double lam = s.lambda;
  const double eps = c.eps;
  GaussianLevel g(s.lattice(), s.gauss);
  StepPieces p = step_pieces(s, c);
  StepReport r;
  r.lambda_k = lam;
  r.lambda_next = p.lambda_next;
  r.mu_bar_k = s.gauss.mu_bar_k;
  r.mu_bar_next = p.gauss_next.mu_bar_k;
  {
    const double mu0 = s.gauss.mu_bar_k * std::pow(static_cast<double>(L), -2.0 * s.gauss.k);
    const double sched = mu0 * std::pow(static_cast<double>(L), 2.0 * p.gauss_next.k);
    r.mu_bar_schedule_error = std::abs(sched - r.mu_bar_next) / std::max(1.0, std::abs(sched));
  }
  r.E_norm_in = E_norm;
  const FieldDomainSpec spec = c.spec(lam);
  r.epsilon0 = p.epsilon0;
  r.epsilon0_bound = std::exp(-0.5 * spec.p0_k() * spec.p0_k()) * c.eps0_margin;
  r.epsilon0_ok = r.epsilon0 <= r.epsilon0_bound;

  std::mt19937_64 rng(c.seed);
  const Index nw = g.unit().size();
  std::vector<Field> probes_phi{Field(s.lattice())};
  for (int i = 0; i < c.probe_fields; ++i) {
    Field Phi1 = random_field(g.coarse(), 0.5, rng);
    Field phi0 = g.phi0_next(Phi1);
    Field psi = g.psi(Phi1, phi0);
    Field W(g.unit());
    std::uniform_int_distribution<int> sgn(0, 1);
    for (Index y = 0; y < nw; ++y) W[y] = (sgn(rng) ? 1.0 : -1.0) * spec.p0_k();
    Field Z(g.unit(), g.sqrtC() * W.values());
    Field Phi = psi + Z;
    Field phik = g.phi(Phi);
    const double pk = spec.p_k();
    double ratio = std::max({sup_norm(Phi - g.Qk().apply_q(phik)) / pk, sup_gradient(phik) / pk,
                             sup_norm(phik) / (std::pow(lam, -0.25) * pk)});
    r.chi_ratio = std::max(r.chi_ratio, ratio);
    double lhs = g.J(Phi1, Phi, phik);
    double rhs = g.S0_next(Phi1, phi0) + g.fluct_form(Z);
    double field_id = sup_norm(phik - (phi0 + g.cal_z(Z))) / std::max(1.0, sup_norm(phik));
    r.audit_change_of_variables = std::max({r.audit_change_of_variables, rel(lhs, rhs), field_id});
    Field w1(s.lattice(), g.fluct_push() * W.values());
    Field w2 = g.phi(Z);
    r.audit_w_substitution = std::max(r.audit_w_substitution, sup_norm(w1 - w2) / std::max(1.0, sup_norm(w2)));
    probes_phi.push_back(phi0);
  }
  r.chi_ok = r.chi_ratio <= 1.0;

  const LocalFunctional Ep = e_plus(s);
  const double vol0 = g.unit().volume();
  for (std::size_t i = 0; i < probes_phi.size() && i < 2; ++i) {
    const Field& phi = probes_phi[i];
    FluctuationResult fr = fluctuation_integral(s, g, phi, c, true);
    r.xi_error = std::max(r.xi_error, std::abs(fr.log_xi_cluster - fr.log_xi_direct));
    if (i == 0 || fr.cluster.tail.reported > r.tail.reported) r.tail = fr.cluster.tail;
    for (const auto& [Y, h] : fr.disconnected) r.disconnected_max = std::max(r.disconnected_max, std::abs(h));
    // log Xi_k by direct quadrature of exp(E^+(phi + W_k)) against the cut-off Gaussian.
    Localization loc(s, g, phi);
    ClusterInstance inst = make_instance(loc, c, lam);
    const double Ep_phi = Ep.total(phi);
    double direct = static_cast<double>(nw) * std::log1p(-gaussian_tail_mass(spec.p0_k())) + Ep_phi +
                    direct_log_xi(loc, inst, c.caps);
    double sharp = 0.0;
    for (const auto& [Y, h] : fr.E_sharp) sharp += h;
    double assembled = -fr.epsilon0 * vol0 + Ep_phi + sharp;
    r.audit_assembly = std::max(r.audit_assembly, rel(direct, assembled));

    std::uniform_real_distribution<double> u(-spec.p0_k(), spec.p0_k());
    std::vector<double> W(static_cast<std::size_t>(nw));
    const CellMask all = (CellMask{1} << loc.n_cells()) - 1;
    for (int trial = 0; trial < 3; ++trial) {
      for (auto& w : W) w = u(rng);
      for (CellMask Y : loc.blocks()) {
        double sum = 0.0;
        for (CellMask Z = Y;; Z = (Z + 1) | Y) {
          double v = loc.piece(Y, Z, W.data());
          if (mask_connected(loc.torus(), Z))
            sum += v;
          else
            r.disconnected_max = std::max(r.disconnected_max, std::abs(v));
          if (Z == all) break;
        }
        r.telescope_error = std::max(r.telescope_error, std::abs(sum - loc.reblocked(Y, all, W.data())));
      }
      for (CellMask Z : loc.supports(loc.n_cells())) {
        std::vector<double> W2 = W;
        for (int cell = 0; cell < loc.n_cells(); ++cell)
          if (!(Z >> cell & 1u))
            for (int y : loc.cell_sites()[static_cast<std::size_t>(cell)]) W2[static_cast<std::size_t>(y)] = u(rng);
        r.locality_error = std::max(r.locality_error, std::abs(loc.local(Z, W.data()) - loc.local(Z, W2.data())));
      }
    }
  }

  const TorusLattice& next_lat = p.E_next.lattice();
  const FieldDomainSpec spec_next = c.spec(p.lambda_next);
  for (int i = 0; i < 2; ++i) {
    Field phi = random_field(next_lat, 0.5 * spec_next.bound_phi(), rng);
    for (const auto& [X, t] : p.E_next.terms()) r.evenness_error = std::max(r.evenness_error, evenness_probe(p.E_next, X, phi));
  }
  NormalizationResult again = normalize(p.E_next, L);
  for (const auto& rec : again.records) {
    r.renormalization_residual = std::max({r.renormalization_residual, std::abs(rec.alpha0), std::abs(rec.alpha2)});
    for (double a2 : rec.alpha2mu) r.renormalization_residual = std::max(r.renormalization_residual, std::abs(a2));
  }

  {
    // Scaled density against the new couplings; the quartic term is common to both sides.
    NormalizationResult n1 = normalize(scale_down(reblock(s.E, L)), L);
    LocalFunctional Es = scale_down(e_sharp_functional(s, c));
    NormalizationResult n2 = normalize(Es, L);
    Field phi = random_field(next_lat, 0.5, rng);
    const double volp = next_lat.volume();
    const double nsq = norm_sq(phi);
    double lhs = -Ld * (s.epsilon + p.epsilon0) * volp - 0.5 * L * L * s.mu * nsq +
                 scale_down(reblock(s.E, L)).total(phi) + Es.total(phi);
    double rhs = -p.epsilon_next * volp - 0.5 * p.mu_next * nsq + p.E_next.total(phi);
    for (const auto* n : {&n1, &n2})
      for (const auto& rec : n->records) {
        auto sites = p.E_next.sites_of(p.E_next.polymer(rec.X.cubes()));
        for (int mu = 0; mu < d; ++mu)
          if (rec.alpha2mu[static_cast<std::size_t>(mu)] != 0.0)
            rhs += rec.alpha2mu[static_cast<std::size_t>(mu)] * evaluate_monomial(Monomial{1.0, 1, 1, mu, sites}, phi);
      }
    r.audit_final_form = rel(lhs, rhs);
  }

  const double Lme = std::pow(static_cast<double>(L), -eps);
  r.bounds.push_back(bound("L1", std::abs(p.L1E), Lme * E_norm));
  r.bounds.push_back(bound("L2", std::abs(p.L2E), Lme * std::pow(lam, 0.5 + 6 * eps) * E_norm));
  r.bounds.push_back(bound("L3", functional_norm(p.L3E, c, p.lambda_next), Lme * E_norm));
  r.bounds.push_back(bound("epsilon*", std::abs(p.epsilon_star), Ld * std::pow(lam, 0.25 - 10 * eps)));
  r.bounds.push_back(bound("mu*", std::abs(p.mu_star), Ld * std::pow(lam, 0.75 - 4 * eps)));
  r.bounds.push_back(bound("E*", functional_norm(p.E_star, c, p.lambda_next), Ld * std::pow(lam, 0.25 - 10 * eps)));

  FlowState next(p.gauss_next, p.epsilon_next, p.mu_next, p.lambda_next, p.E_next);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return StepResult{std::move(next), std::move(p), std::move(r)};
}

PowerStructureReport power_structure(int d, int L, Index unit_side, const std::vector<double>& lambdas,
                                     const StepControls& c) {
  PowerStructureReport r;
  std::vector<double> lams = lambdas;
  std::sort(lams.begin(), lams.end(), std::greater<>());
  const double Ld = dpow(L, d);
  for (double lam : lams) {
    FlowState s = micro_state(d, L, unit_side, 1, 0, lam);
    StepPieces p = step_pieces(s, c);
    r.lambdas.push_back(lam);
    r.mu_star_prefactor.push_back(std::abs(p.mu_star) / (Ld * std::pow(lam, 0.75 - 4 * c.eps)));
    r.E_star_prefactor.push_back(functional_norm(p.E_star, c, p.lambda_next) /
                                 (Ld * std::pow(lam, 0.25 - 10 * c.eps)));
  }
  for (std::size_t i = 1; i < r.lambdas.size(); ++i) {
    if (r.mu_star_prefactor[i] > r.mu_star_prefactor[i - 1] * (1.0 + 1e-9)) r.mu_ok = false;
    if (r.E_star_prefactor[i] > r.E_star_prefactor[i - 1] * (1.0 + 1e-9)) r.E_ok = false;
  }
  return r;
}

DerivativeReport cauchy_derivatives(const FlowState& s, const StepControls& c) {
  double E_norm = 0.0;
  check_hypotheses(s, c, 0.5, 0.5, E_norm);
  const double lam = s.lambda;
  const double eps = c.eps;
  const double Ld = dpow(s.L(), s.d());
  const double lam_next = lambda_scale_factor(s.L(), s.d()) * lam;
  const double h = 0.05 * 0.5 * std::sqrt(lam);
  auto with = [&](double dmu, double dE, const LocalFunctional& dir) {
    FlowState t = s;
    t.mu += dmu;
    if (dE != 0.0) t.E = s.E + dir * dE;
    return step_pieces(t, c);
  };
  LocalFunctional none(s.lattice(), s.E.cube_exp());
  StepPieces base = with(0.0, 0.0, none);
  StepPieces up = with(h, 0.0, none);
  StepPieces dn = with(-h, 0.0, none);
  DerivativeReport r;
  r.dmu_dmu = (up.mu_star - dn.mu_star) / (2 * h);
  const double fwd = (up.mu_star - base.mu_star) / h;
  r.forward_vs_symmetric = std::abs(fwd - r.dmu_dmu) / std::max(std::abs(r.dmu_dmu), 1e-300);
  r.dE_dmu = functional_norm(up.E_star + dn.E_star * -1.0, c, lam_next) / (2 * h);

  // Unit-norm direction: a quartic on every cube.
  const FieldDomainSpec spec = c.spec(lam);
  LocalFunctional dir(s.lattice(), s.E.cube_exp());
  const Polymer first = dir.polymer({0});
  const double coeff = 1.0 / (dir.volume(first) * std::pow(spec.bound_phi(), 4));
  for (Index q = 0; q < dir.cube_torus().count(); ++q) dir.add_monomial(dir.polymer({q}), coeff, 4);
  const double t = 0.05 * 0.5;
  StepPieces eu = with(0.0, t, dir);
  StepPieces ed = with(0.0, -t, dir);
  r.dmu_dE = std::abs(eu.mu_star - ed.mu_star) / (2 * t);
  r.dE_dE = functional_norm(eu.E_star + ed.E_star * -1.0, c, lam_next) / (2 * t);
  r.envelopes.push_back(bound("dmu*/dmu", std::abs(r.dmu_dmu), Ld * std::pow(lam, 0.25 - 4 * eps)));
  r.envelopes.push_back(bound("dmu*/dE", r.dmu_dE, Ld * std::pow(lam, 0.75 - 4 * eps)));
  r.envelopes.push_back(bound("dE*/dmu", r.dE_dmu, Ld * std::pow(lam, -0.25 - 10 * eps)));
  r.envelopes.push_back(bound("dE*/dE", r.dE_dE, Ld * std::pow(lam, 0.25 - 10 * eps)));
  return r;
}

}  // namespace blockrg
