#include "blockrg/functional.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>

#include "blockrg/error.hpp"
#include "blockrg/greens.hpp"

namespace blockrg {

namespace {

constexpr int kMaxOrder = 4;
using Nil = std::array<double, 1 << kMaxOrder>;

// Product in R[t_1..t_n] / (t_i^2).
Nil nil_mul(const Nil& a, const Nil& b, int n) {
  Nil c{};
  const int full = 1 << n;
  for (int i = 0; i < full; ++i) {
    if (a[static_cast<std::size_t>(i)] == 0.0) continue;
    for (int j = 0; j < full; ++j)
      if ((i & j) == 0) c[static_cast<std::size_t>(i | j)] += a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(j)];
  }
  return c;
}

Nil nil_pow(const Nil& a, int p, int n) {
  Nil r{};
  r[0] = 1.0;
  for (int i = 0; i < p; ++i) r = nil_mul(r, a, n);
  return r;
}

template <class Scalar>
Scalar monomial_value(const Monomial& m, const BasicField<Scalar>& phi) {
  const TorusLattice& lat = phi.lattice();
  const auto& sites = *m.sites;
  Scalar s = 0.0;
  const double h = lat.spacing();
  for (Index x : sites) {
    Scalar term = std::pow(phi[x], m.field_power);
    if (m.grad_power > 0) {
      Index y = lat.shift(x, m.direction, 1);
      if (!std::binary_search(sites.begin(), sites.end(), y)) continue;
      term *= std::pow((phi[y] - phi[x]) / h, m.grad_power);
    }
    s += term;
  }
  return m.coeff * lat.site_weight() * s;
}

SiteList make_sites(std::vector<Index> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return std::make_shared<const std::vector<Index>>(std::move(v));
}

double region_integral(const Field& f, const std::vector<Index>& sites) {
  double s = 0.0;
  for (Index x : sites) s += f[x];
  return s * f.lattice().site_weight();
}

}  // namespace

LocalFunctional::LocalFunctional(const TorusLattice& lat, int cube_exp)
    : cubes_(lat, cube_exp - lat.spacing_exp()), cube_exp_(cube_exp), torus_(lat.d(), cubes_.coarse().side()) {}

SiteList LocalFunctional::sites_of(const Polymer& X) const {
  if (!(X.torus() == torus_)) throw ConfigError("polymer belongs to a different cube torus");
  std::vector<Index> v;
  for (Index c : X.cubes()) {
    const auto& s = cubes_.sites_of(c);
    v.insert(v.end(), s.begin(), s.end());
  }
  return make_sites(std::move(v));
}

double LocalFunctional::volume(const Polymer& X) const {
  return lattice().site_weight() * static_cast<double>(X.size() * cubes_.block_size());
}

void LocalFunctional::add_monomial(const Polymer& X, double coeff, int p, int q, int mu) {
  add_monomial(X, Monomial{coeff, p, q, mu, sites_of(X)});
}

void LocalFunctional::add_monomial(const Polymer& X, Monomial m) {
  if (m.field_power < 0 || m.grad_power < 0) throw ConfigError("negative monomial power");
  if (m.direction < 0 || m.direction >= lattice().d()) throw ConfigError("monomial direction out of range");
  if (!m.sites) m.sites = sites_of(X);
  terms_[X].monomials.push_back(std::move(m));
}

void LocalFunctional::add_opaque(const Polymer& X, OpaqueTerm t) {
  if (!t.sites) t.sites = sites_of(X);
  terms_[X].opaque.push_back(std::move(t));
}

void LocalFunctional::add_term(const Polymer& X, const PolymerTerm& t) {
  auto& dst = terms_[X];
  dst.monomials.insert(dst.monomials.end(), t.monomials.begin(), t.monomials.end());
  dst.opaque.insert(dst.opaque.end(), t.opaque.begin(), t.opaque.end());
}

const PolymerTerm& LocalFunctional::term(const Polymer& X) const {
  auto it = terms_.find(X);
  if (it == terms_.end()) throw DomainError("no term stored for polymer");
  return it->second;
}

bool LocalFunctional::polynomial() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const auto& kv) { return kv.second.polynomial(); });
}

double evaluate_monomial(const Monomial& m, const Field& phi) { return monomial_value(m, phi); }

std::complex<double> evaluate_monomial(const Monomial& m, const ComplexField& phi) { return monomial_value(m, phi); }

double LocalFunctional::evaluate(const Polymer& X, const Field& phi) const {
  if (phi.lattice() != lattice()) throw ConfigError("field lattice does not match the functional");
  auto it = terms_.find(X);
  if (it == terms_.end()) return 0.0;
  double s = 0.0;
  for (const auto& m : it->second.monomials) s += evaluate_monomial(m, phi);
  for (const auto& o : it->second.opaque) s += o.eval(phi);
  return s;
}

std::complex<double> LocalFunctional::evaluate(const Polymer& X, const ComplexField& phi) const {
  if (phi.lattice() != lattice()) throw ConfigError("field lattice does not match the functional");
  auto it = terms_.find(X);
  if (it == terms_.end()) return 0.0;
  if (!it->second.polynomial()) throw DomainError("complex evaluation needs a polynomial term");
  std::complex<double> s = 0.0;
  for (const auto& m : it->second.monomials) s += evaluate_monomial(m, phi);
  return s;
}

double LocalFunctional::total(const Field& phi) const {
  double s = 0.0;
  for (const auto& kv : terms_) s += evaluate(kv.first, phi);
  return s;
}

LocalFunctional LocalFunctional::operator+(const LocalFunctional& o) const {
  if (o.lattice() != lattice() || o.cube_exp_ != cube_exp_) throw ConfigError("functionals live on different lattices");
  LocalFunctional r = *this;
  for (const auto& [X, t] : o.terms_) r.add_term(X, t);
  return r;
}

LocalFunctional LocalFunctional::operator*(double c) const {
  LocalFunctional r = *this;
  for (auto& [X, t] : r.terms_) {
    for (auto& m : t.monomials) m.coeff *= c;
    for (auto& o : t.opaque) {
      auto f = o.eval;
      o.eval = [f, c](const Field& phi) { return c * f(phi); };
    }
  }
  return r;
}

double monomial_derivative(const Monomial& m, const Field& phi0, const std::vector<Field>& dirs) {
  const int n = static_cast<int>(dirs.size());
  if (n > kMaxOrder) throw ConfigError("derivatives above order 4 are not supported");
  const TorusLattice& lat = phi0.lattice();
  const auto& sites = *m.sites;
  const double h = lat.spacing();
  const std::size_t full = (std::size_t{1} << n) - 1;
  double s = 0.0;
  for (Index x : sites) {
    Nil u{};
    u[0] = phi0[x];
    for (int i = 0; i < n; ++i) u[std::size_t{1} << i] = dirs[static_cast<std::size_t>(i)][x];
    Nil v = nil_pow(u, m.field_power, n);
    if (m.grad_power > 0) {
      Index y = lat.shift(x, m.direction, 1);
      if (!std::binary_search(sites.begin(), sites.end(), y)) continue;
      Nil g{};
      g[0] = (phi0[y] - phi0[x]) / h;
      for (int i = 0; i < n; ++i) {
        const Field& f = dirs[static_cast<std::size_t>(i)];
        g[std::size_t{1} << i] = (f[y] - f[x]) / h;
      }
      v = nil_mul(v, nil_pow(g, m.grad_power, n), n);
    }
    s += v[full];
  }
  return m.coeff * lat.site_weight() * s;
}

double fd_derivative(const std::function<double(const Field&)>& f, const Field& phi0, const std::vector<Field>& dirs) {
  const int n = static_cast<int>(dirs.size());
  if (n > kMaxOrder) throw ConfigError("derivatives above order 4 are not supported");
  if (n == 0) return f(phi0);
  double scale = 0.0;
  for (const auto& d : dirs) scale = std::max(scale, sup_norm(d));
  if (scale == 0.0) return 0.0;
  auto central = [&](double h) {
    double s = 0.0;
    for (int mask = 0; mask < (1 << n); ++mask) {
      Field p = phi0;
      int sign = 1;
      for (int i = 0; i < n; ++i) {
        double t = (mask >> i & 1) ? -h : h;
        if (mask >> i & 1) sign = -sign;
        p.values() += t * dirs[static_cast<std::size_t>(i)].values();
      }
      s += sign * f(p);
    }
    return s / std::pow(2.0 * h, n);
  };
  const double h = 2e-2 / scale;
  return (4.0 * central(h / 2) - central(h)) / 3.0;
}

double derivative(const LocalFunctional& E, const Polymer& X, const Field& phi0, const std::vector<Field>& dirs) {
  if (!E.has(X)) return 0.0;
  const auto& t = E.term(X);
  double s = 0.0;
  for (const auto& m : t.monomials) s += monomial_derivative(m, phi0, dirs);
  for (const auto& o : t.opaque) s += fd_derivative(o.eval, phi0, dirs);
  return s;
}

double cauchy_derivative(const LocalFunctional& E, const Polymer& X, const Field& phi0, const Field& f, int n,
                         double radius, int nodes) {
  if (n < 0 || nodes <= n) throw ConfigError("need more contour nodes than the derivative order");
  const TorusLattice& lat = phi0.lattice();
  std::complex<double> acc = 0.0;
  for (int j = 0; j < nodes; ++j) {
    std::complex<double> w = std::polar(1.0, 2.0 * std::numbers::pi * j / nodes);
    std::complex<double> z = radius * w;
    ComplexField p(lat, phi0.values().cast<std::complex<double>>() + z * f.values().cast<std::complex<double>>());
    acc += E.evaluate(X, p) * std::pow(w, -n);
  }
  return std::tgamma(n + 1.0) * acc.real() / (nodes * std::pow(radius, n));
}

double FieldDomainSpec::bound_phi() const { return rho * std::pow(lambda, -0.25 - 3 * eps); }
double FieldDomainSpec::bound_grad() const { return rho * std::pow(lambda, -0.25 - 2 * eps); }
double FieldDomainSpec::bound_holder() const { return rho * std::pow(lambda, -0.25 - eps); }
double FieldDomainSpec::p_k() const { return std::pow(-std::log(lambda), p); }
double FieldDomainSpec::p0_k() const { return std::pow(-std::log(lambda), p0); }

DomainCheck check_domain(const Field& phi, const FieldDomainSpec& spec) {
  DomainCheck c;
  c.phi_ratio = sup_norm(phi) / spec.bound_phi();
  double g = 0.0;
  for (int mu = 0; mu < phi.lattice().d(); ++mu) g = std::max(g, sup_norm(forward_derivative(phi, mu)));
  c.grad_ratio = g / spec.bound_grad();
  c.holder_ratio = holder_site_profile(phi, spec.alpha).maxCoeff() / spec.bound_holder();
  if (c.phi_ratio >= 1.0) {
    c.ok = false;
    c.failing = "field";
  } else if (c.grad_ratio >= 1.0) {
    c.ok = false;
    c.failing = "gradient";
  } else if (c.holder_ratio >= 1.0) {
    c.ok = false;
    c.failing = "holder";
  }
  return c;
}

NormValue norm_analytic(const LocalFunctional& E, const Polymer& X, const FieldDomainSpec& spec) {
  NormValue r;
  if (!E.has(X)) return r;
  const auto& t = E.term(X);
  if (!t.polynomial()) throw DomainError("analytic norm needs a polynomial term");
  const TorusLattice& lat = E.lattice();
  for (const auto& m : t.monomials) {
    double count = 0.0;
    for (Index x : *m.sites)
      if (m.grad_power == 0 || std::binary_search(m.sites->begin(), m.sites->end(), lat.shift(x, m.direction, 1)))
        count += 1.0;
    r.value += std::abs(m.coeff) * lat.site_weight() * count * std::pow(spec.bound_phi(), m.field_power) *
               std::pow(spec.bound_grad(), m.grad_power);
  }
  return r;
}

NormValue norm_sampled(const LocalFunctional& E, const Polymer& X, const FieldDomainSpec& spec, int random_samples,
                       unsigned seed) {
  NormValue r;
  r.kind = Certificate::lower;
  const TorusLattice& lat = E.lattice();
  auto consider = [&](Field phi) {
    for (int tries = 0; tries < 60 && !check_domain(phi, spec).ok; ++tries) phi = phi * 0.9;
    r.value = std::max(r.value, std::abs(E.evaluate(X, phi)));
  };
  const double B = spec.bound_phi() * (1.0 - 1e-9);
  for (double c : {B, -B, 0.5 * B, 0.0}) consider(Field::constant(lat, c));
  for (int mu = 0; mu < lat.d(); ++mu) {
    Field ramp(lat);
    const double len = lat.continuum_side();
    for (Index x = 0; x < lat.size(); ++x) {
      double xm = lat.spacing() * static_cast<double>(lat.coords(x)[static_cast<std::size_t>(mu)]);
      ramp[x] = B * std::cos(2.0 * std::numbers::pi * xm / len);
    }
    consider(ramp);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int s = 0; s < random_samples; ++s) {
    Field phi(lat);
    for (Index x = 0; x < lat.size(); ++x) phi[x] = B * u(rng);
    consider(phi);
  }
  return r;
}

NormValue global_norm(const LocalFunctional& E, const FieldDomainSpec& spec, double kappa, Certificate strategy,
                      int random_samples, unsigned seed) {
  NormValue r;
  r.kind = strategy;
  for (const auto& kv : E.terms()) {
    NormValue v = strategy == Certificate::upper ? norm_analytic(E, kv.first, spec)
                                                 : norm_sampled(E, kv.first, spec, random_samples, seed);
    r.value = std::max(r.value, v.value * std::exp(kappa * kv.first.d_M()));
  }
  return r;
}

LocalFunctional reblock(const LocalFunctional& E, int L) {
  if (L != E.lattice().L()) throw ConfigError("reblocking factor must equal the lattice L");
  LocalFunctional out(E.lattice(), E.cube_exp() + 1);
  for (const auto& [X, t] : E.terms()) {
    Polymer Y = reblock(X, L);
    out.add_term(out.polymer(Y.cubes()), t);
  }
  return out;
}

LocalFunctional scale_down(const LocalFunctional& F) {
  const TorusLattice lat = F.lattice().scaled_down();
  LocalFunctional out(lat, F.cube_exp() - 1);
  const int d = lat.d();
  const double s = field_dimension(d);
  const double L = lat.L();
  for (const auto& [X, t] : F.terms()) {
    Polymer Xs = out.polymer(X.cubes());
    PolymerTerm nt;
    for (auto m : t.monomials) {
      m.coeff *= std::pow(L, d - s * m.field_power - (s + 1.0) * m.grad_power);
      nt.monomials.push_back(std::move(m));
    }
    for (auto o : t.opaque) {
      auto f = o.eval;
      o.eval = [f](const Field& phi) { return f(scale_field(phi, ScaleDirection::up)); };
      nt.opaque.push_back(std::move(o));
    }
    out.add_term(Xs, nt);
  }
  return out;
}

std::vector<Field> relative_coordinates(const LocalFunctional& E, const Polymer& X) {
  const TorusLattice& lat = E.lattice();
  const auto sites = E.sites_of(X);
  const Index b = E.cubes().block_side();
  Coord c0 = E.cubes().coarse().coords(X.cubes().front());
  Coord x0c{0, 0, 0};
  for (int mu = 0; mu < lat.d(); ++mu) x0c[static_cast<std::size_t>(mu)] = c0[static_cast<std::size_t>(mu)] * b;
  const Index x0 = lat.index(x0c);
  std::vector<Field> g(static_cast<std::size_t>(lat.d()), Field(lat));
  std::vector<std::array<Index, 3>> rel(static_cast<std::size_t>(lat.size()));
  std::vector<char> seen(static_cast<std::size_t>(lat.size()), 0);
  std::queue<Index> q;
  q.push(x0);
  seen[static_cast<std::size_t>(x0)] = 1;
  rel[static_cast<std::size_t>(x0)] = {0, 0, 0};
  auto inside = [&](Index y) { return std::binary_search(sites->begin(), sites->end(), y); };
  while (!q.empty()) {
    Index x = q.front();
    q.pop();
    for (int mu = 0; mu < lat.d(); ++mu)
      for (int st : {1, -1}) {
        Index y = lat.shift(x, mu, st);
        if (!inside(y) || seen[static_cast<std::size_t>(y)]) continue;
        seen[static_cast<std::size_t>(y)] = 1;
        rel[static_cast<std::size_t>(y)] = rel[static_cast<std::size_t>(x)];
        rel[static_cast<std::size_t>(y)][static_cast<std::size_t>(mu)] += st;
        q.push(y);
      }
  }
  for (Index x : *sites)
    for (int mu = 0; mu < lat.d(); ++mu)
      g[static_cast<std::size_t>(mu)][x] =
          lat.spacing() * static_cast<double>(rel[static_cast<std::size_t>(x)][static_cast<std::size_t>(mu)]);
  return g;
}

ExtractRecord extract(const LocalFunctional& E, const Polymer& X) {
  ExtractRecord r{X};
  const TorusLattice& lat = E.lattice();
  const double vol = E.volume(X);
  const Field zero(lat);
  const Field one = Field::constant(lat, 1.0);
  r.alpha0 = E.evaluate(X, zero) / vol;
  const double e11 = derivative(E, X, zero, {one, one});
  r.alpha2 = e11 / (2.0 * vol);
  const auto sites = E.sites_of(X);
  auto g = relative_coordinates(E, X);
  for (int mu = 0; mu < lat.d(); ++mu) {
    const Field& gm = g[static_cast<std::size_t>(mu)];
    double num = derivative(E, X, zero, {one, gm}) - e11 / vol * region_integral(gm, *sites);
    double V = monomial_derivative(Monomial{1.0, 1, 1, mu, sites}, zero, {one, gm});
    r.bond_volume[static_cast<std::size_t>(mu)] = V;
    r.alpha2mu[static_cast<std::size_t>(mu)] = std::abs(V) > 1e-12 * vol ? num / V : 0.0;
  }
  return r;
}

NormalizationResult normalize(const LocalFunctional& E, int L_small, double symmetry_tol) {
  NormalizationResult res(E);
  const auto nc = static_cast<std::size_t>(E.cube_torus().count());
  std::vector<double> eps_c(nc, 0.0), mu_c(nc, 0.0);
  std::vector<std::array<double, 3>> refl(nc, {0.0, 0.0, 0.0});
  double scale = 0.0;
  for (const auto& kv : E.terms()) {
    const Polymer& X = kv.first;
    if (!is_small(X, L_small)) continue;
    ExtractRecord r = extract(E, X);
    res.remainder.add_monomial(X, -r.alpha0, 0);
    res.remainder.add_monomial(X, -r.alpha2, 2);
    for (int mu = 0; mu < E.lattice().d(); ++mu)
      if (r.alpha2mu[static_cast<std::size_t>(mu)] != 0.0)
        res.remainder.add_monomial(X, -r.alpha2mu[static_cast<std::size_t>(mu)], 1, 1, mu);
    for (Index c : X.cubes()) {
      auto u = static_cast<std::size_t>(c);
      eps_c[u] -= r.alpha0;
      mu_c[u] -= 2.0 * r.alpha2;
      for (int mu = 0; mu < 3; ++mu) refl[u][static_cast<std::size_t>(mu)] += r.alpha2mu[static_cast<std::size_t>(mu)];
    }
    for (int mu = 0; mu < 3; ++mu) scale = std::max(scale, std::abs(r.alpha2mu[static_cast<std::size_t>(mu)]));
    res.records.push_back(r);
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto spread = [](const std::vector<double>& v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
  };
  res.epsilon = mean(eps_c);
  res.mu = mean(mu_c);
  res.epsilon_spread = spread(eps_c);
  res.mu_spread = spread(mu_c);
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t mu = 0; mu < 3; ++mu)
      if (std::abs(refl[c][mu]) > std::abs(res.reflection_sum[mu])) res.reflection_sum[mu] = refl[c][mu];
  for (double s : res.reflection_sum)
    if (std::abs(s) > symmetry_tol * std::max(1.0, scale)) res.symmetric = false;
  return res;
}

double locality_probe(const LocalFunctional& E, const Polymer& X, const Field& phi, unsigned seed) {
  const auto sites = E.sites_of(X);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Field p = phi;
  for (Index x = 0; x < p.size(); ++x)
    if (!std::binary_search(sites->begin(), sites->end(), x)) p[x] += n(rng);
  return std::abs(E.evaluate(X, p) - E.evaluate(X, phi));
}

double evenness_probe(const LocalFunctional& E, const Polymer& X, const Field& phi) {
  return std::abs(E.evaluate(X, -phi) - E.evaluate(X, phi));
}

double translation_probe(const LocalFunctional& E, const Polymer& X, const Field& phi, int mu) {
  const CubeTorus& t = E.cube_torus();
  std::vector<Index> moved;
  for (Index c : X.cubes()) {
    Coord x = t.coords(c);
    x[static_cast<std::size_t>(mu)] += 1;
    moved.push_back(t.index(x));
  }
  const TorusLattice& lat = E.lattice();
  const Index b = E.cubes().block_side();
  Field shifted(lat);
  for (Index x = 0; x < lat.size(); ++x) shifted[lat.shift(x, mu, b)] = phi[x];
  return std::abs(E.evaluate(E.polymer(moved), shifted) - E.evaluate(X, phi));
}

StrongFieldReport strong_field_facts(const GaussianLevel& g, const Field& Phi, const FieldDomainSpec& spec) {
  StrongFieldReport r;
  const double pk = spec.p_k();
  const double l4 = std::pow(spec.lambda, -0.25);
  Field phi = g.phi(Phi);
  double s1 = sup_norm(Phi - g.Qk().apply_q(phi));
  double s2 = 0.0;
  for (int mu = 0; mu < phi.lattice().d(); ++mu) s2 = std::max(s2, sup_norm(forward_derivative(phi, mu)));
  double s3 = sup_norm(phi);
  r.member = true;
  if (s1 > pk) {
    r.member = false;
    r.failing = "Phi - Q phi";
  } else if (s2 > pk) {
    r.member = false;
    r.failing = "gradient";
  } else if (s3 > l4 * pk) {
    r.member = false;
    r.failing = "field";
  }
  double dPhi = 0.0;
  for (int mu = 0; mu < Phi.lattice().d(); ++mu) dPhi = std::max(dPhi, sup_norm(forward_derivative(Phi, mu)));
  r.phi_ratio = sup_norm(Phi) / (2.0 * pk * l4);
  r.grad_ratio = dPhi / (3.0 * pk);
  if (r.member) {
    r.phi_bound = r.phi_ratio <= 1.0;
    r.grad_bound = r.grad_ratio <= 1.0;
    r.in_R = check_domain(phi, spec).ok;
  }
  return r;
}

}  // namespace blockrg
