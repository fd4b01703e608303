#include <cmath>
#include <random>

#include "doctest.h"

#include "blockrg/functional.hpp"

using namespace blockrg;

namespace {

Field random_field(const TorusLattice& lat, unsigned seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Field f(lat);
  for (Index i = 0; i < lat.size(); ++i) f[i] = n(rng);
  return f;
}

// Translation-invariant functional on the d = 1 ring of nine unit cubes.
LocalFunctional ring_functional() {
  LocalFunctional E(TorusLattice(1, 3, -1, 27), 0);
  for (Index c = 0; c < 9; ++c) {
    Polymer X = E.polymer({c});
    E.add_monomial(X, 0.3, 4);
    E.add_monomial(X, 0.7, 2);
    E.add_monomial(X, 0.2, 0);
    E.add_monomial(X, 0.1, 0, 2, 0);
    Polymer Y = E.polymer({c, (c + 1) % 9});
    E.add_monomial(Y, 0.05, 2);
    E.add_monomial(Y, 0.02, 2, 2, 0);
  }
  return E;
}

}  // namespace

TEST_CASE("monomials on constant fields") {
  LocalFunctional E(TorusLattice(2, 3, -1, 9), 0);
  Polymer X = E.polymer({0, 1});
  CHECK(E.sites_of(X)->size() == 18);
  CHECK(E.volume(X) == doctest::Approx(2.0));
  E.add_monomial(X, 0.5, 4);
  E.add_monomial(X, 2.0, 1, 2, 1);
  const Field c = Field::constant(E.lattice(), 1.5);
  CHECK(E.evaluate(X, c) == doctest::Approx(0.5 * 2.0 * std::pow(1.5, 4)));
  CHECK(E.polynomial());
  CHECK((E * 2.0).evaluate(X, c) == doctest::Approx(2.0 * E.evaluate(X, c)));
  CHECK((E + E).evaluate(X, c) == doctest::Approx(2.0 * E.evaluate(X, c)));
}

TEST_CASE("symbolic, finite-difference and Cauchy derivatives agree") {
  const TorusLattice lat(1, 3, -1, 27);
  LocalFunctional F(lat, 0);
  Polymer X = F.polymer({0, 1});
  F.add_monomial(X, 1.0, 4);
  const Field f = random_field(lat, 3);
  double s = 0.0;
  const SiteList sites = F.sites_of(X);
  for (Index x : *sites) s += std::pow(f[x], 4);
  s *= lat.site_weight();
  CHECK(derivative(F, X, Field(lat), {f, f, f, f}) == doctest::Approx(24.0 * s).epsilon(1e-12));
  OpaqueTerm o;
  o.eval = [&](const Field& p) { return F.evaluate(X, p); };
  o.sites = sites;
  LocalFunctional G(lat, 0);
  G.add_opaque(X, o);
  CHECK_FALSE(G.polynomial());
  CHECK(derivative(G, X, Field(lat), {f, f, f, f}) == doctest::Approx(24.0 * s).epsilon(1e-6));
  const double d2 = derivative(F, X, f, {f, f});
  CHECK(d2 == doctest::Approx(12.0 * s).epsilon(1e-12));
  CHECK(derivative(G, X, f, {f, f}) == doctest::Approx(d2).epsilon(1e-7));
  CHECK(cauchy_derivative(F, X, f, f, 2, 1.0) == doctest::Approx(d2).epsilon(1e-12));
}

TEST_CASE("normalization of a translation-invariant functional") {
  const LocalFunctional E = ring_functional();
  NormalizationResult res = normalize(E, 3);
  // epsilon = -(constant per unit volume), mu = -2 (phi^2 coefficient per unit volume).
  CHECK(res.epsilon == doctest::Approx(-0.2).epsilon(1e-13));
  CHECK(res.mu == doctest::Approx(-2.0 * (0.7 + 2.0 * 0.05)).epsilon(1e-13));
  CHECK(res.epsilon_spread < 1e-13);
  CHECK(res.mu_spread < 1e-13);
  CHECK(res.symmetric);
  NormalizationResult again = normalize(res.remainder, 3);
  for (const ExtractRecord& r : again.records) {
    CHECK(std::abs(r.alpha0) < 1e-13);
    CHECK(std::abs(r.alpha2) < 1e-13);
    CHECK(std::abs(r.alpha2mu[0]) < 1e-13);
  }
  const Field phi = random_field(E.lattice(), 4);
  CHECK(E.total(phi) == doctest::Approx(-res.epsilon * E.lattice().volume() - 0.5 * res.mu * norm_sq(phi) +
                                        res.remainder.total(phi))
                            .epsilon(1e-12));
}

TEST_CASE("purely quadratic functional leaves no remainder") {
  LocalFunctional E(TorusLattice(1, 3, -1, 27), 0);
  for (Index c = 0; c < 9; ++c) {
    E.add_monomial(E.polymer({c}), 0.4, 2);
    E.add_monomial(E.polymer({c}), -0.1, 0);
  }
  NormalizationResult res = normalize(E, 3);
  const Field phi = random_field(E.lattice(), 9);
  CHECK(std::abs(res.remainder.total(phi)) < 1e-13);
  CHECK(res.mu == doctest::Approx(-0.8));
  CHECK(res.epsilon == doctest::Approx(0.1));
}

TEST_CASE("reblocking and scaling preserve the total") {
  const LocalFunctional E = ring_functional();
  const LocalFunctional sd = scale_down(reblock(E, 3));
  CHECK(sd.cube_exp() == 0);
  const Field ps = random_field(sd.lattice(), 5);
  const Field pu = scale_field(ps, ScaleDirection::up);
  CHECK(sd.total(ps) == doctest::Approx(E.total(pu)).epsilon(1e-12));
  const LocalFunctional B = reblock(E, 3);
  const Field phi = random_field(E.lattice(), 6);
  CHECK(B.total(phi) == doctest::Approx(E.total(phi)).epsilon(1e-12));
}

TEST_CASE("structural probes") {
  const LocalFunctional E = ring_functional();
  const Polymer X = E.polymer({2, 3});
  const Field phi = random_field(E.lattice(), 7);
  CHECK(evenness_probe(E, X, phi) < 1e-12);
  CHECK(translation_probe(E, X, phi, 0) < 1e-12);
  CHECK(locality_probe(E, X, phi, 1) < 1e-12);
  LocalFunctional odd(E.lattice(), 0);
  odd.add_monomial(X, 1.0, 3);
  CHECK(evenness_probe(odd, X, phi) > 1e-3);
}

TEST_CASE("field domain and norms") {
  FieldDomainSpec spec;
  spec.lambda = 1e-4;
  CHECK(spec.bound_phi() == doctest::Approx(std::pow(1e-4, -0.25 - 0.03)));
  CHECK(spec.p_k() == doctest::Approx(std::pow(-std::log(1e-4), 3)));
  const TorusLattice lat(1, 3, -1, 27);
  CHECK(check_domain(Field::constant(lat, 1.0), spec).ok);
  CHECK_FALSE(check_domain(Field::constant(lat, 2.0 * spec.bound_phi()), spec).ok);
  LocalFunctional E(lat, 0);
  Polymer X = E.polymer({0});
  E.add_monomial(X, 0.25, 4);
  const NormValue up = norm_analytic(E, X, spec);
  const NormValue lo = norm_sampled(E, X, spec, 4, 1);
  CHECK(up.kind == Certificate::upper);
  CHECK(lo.kind == Certificate::lower);
  CHECK(lo.value <= up.value * (1.0 + 1e-12));
  // Constant field at the bound saturates the quartic.
  CHECK(lo.value == doctest::Approx(up.value).epsilon(1e-6));
}
