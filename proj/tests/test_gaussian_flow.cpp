#include <cmath>

#include "doctest.h"

#include "blockrg/gaussian_flow.hpp"
#include "blockrg/linalg.hpp"

using namespace blockrg;

namespace {

GaussianLevel level(int d, Index unit_side, double mu_bar = 0.0, int k = 1) {
  GaussParams p;
  p.L = 3;
  p.a = 1.0;
  p.k = k;
  p.mu_bar_k = mu_bar;
  return GaussianLevel(TorusLattice(d, 3, -k, unit_side * ipow(3, k)), p);
}

}  // namespace

TEST_CASE("a_k closed form and recursion") {
  CHECK(std::isinf(a_k_closed(1.0, 3, 0)));
  CHECK(a_k_closed(1.0, 3, 1) == doctest::Approx(1.0));
  CHECK(a_k_closed(1.0, 3, 2) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(a_k_closed(1.0, 3, 3) == doctest::Approx(648.0 / 728.0).epsilon(1e-15));
  CHECK(a_k_closed(2.0, 2, 2) == doctest::Approx(1.6).epsilon(1e-15));
  double ak = a_k_closed(1.0, 3, 1);
  for (int k = 1; k < 64; ++k) {
    ak = a_k_step(ak, 1.0, 3);
    CHECK(ak == doctest::Approx(a_k_closed(1.0, 3, k + 1)).epsilon(1e-13));
  }
  // Limit a (1 - L^{-2}).
  CHECK(a_k_closed(1.0, 3, 64) == doctest::Approx(8.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("coupling schedules") {
  CHECK(mu_bar_schedule(2.0, 3, 5, 3) == doctest::Approx(2.0 / 81.0));
  CHECK(lambda_scale_factor(3, 3) == doctest::Approx(3.0));
  CHECK(lambda_scale_factor(3, 1) == doctest::Approx(27.0));
  CHECK(lambda_schedule(1.0, 3, 4, 2) == doctest::Approx(1.0 / 9.0));
  CHECK(lambda_schedule(1.0, 3, 4, 2, 2) == doctest::Approx(1.0 / 81.0));
  GaussParams p;
  CHECK(p.c_mix() == doctest::Approx((1.0 / 9.0) / (1.0 + 1.0 / 9.0)));
}

TEST_CASE("constant fields: minimizer and quadratic forms") {
  // For constant Phi the minimizer is constant: a_k Phi / (a_k + mu_bar), and
  // Delta_k 1 = a_k mu_bar / (a_k + mu_bar).
  for (double mu_bar : {0.0, 0.3}) {
    GaussianLevel g = level(1, 9, mu_bar);
    const double ak = g.params().a_k();
    const Field one = Field::constant(g.unit(), 1.0);
    CHECK(sup_norm(g.phi(one) - Field::constant(g.fine(), ak / (ak + mu_bar))) < 1e-12);
    const Vector D1 = g.Delta() * one.values();
    CHECK((D1.array() - ak * mu_bar / (ak + mu_bar)).abs().maxCoeff() < 1e-12);
    const Vector C1 = g.C() * one.values();
    CHECK((C1.array() - 1.0 / (ak * mu_bar / (ak + mu_bar) + 1.0 / 9.0)).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("green's function inverts the level operator") {
  GaussianLevel g = level(2, 9);
  CHECK(max_abs_diff(g.op() * g.G(), Matrix::Identity(g.fine().size(), g.fine().size())) < 1e-10);
  CHECK(max_abs_diff(g.C() * g.C_inverse(), Matrix::Identity(g.unit().size(), g.unit().size())) < 1e-10);
  CHECK(max_abs_diff(g.sqrtC() * g.sqrtC(), g.C()) < 1e-12);
  CHECK(is_spd(g.Delta() + Matrix::Identity(g.unit().size(), g.unit().size()) * 1e-12));
}

TEST_CASE("square-root integral reproduces C^{1/2}") {
  GaussianLevel g = level(1, 9);
  CHECK(max_abs_diff(sqrt_covariance_integral(g, 1e-12), g.sqrtC()) < 1e-10);
}

TEST_CASE("single-step identities on small tori") {
  for (int d = 1; d <= 2; ++d) {
    GaussianLevel g = level(d, 9);
    IdentityReport r = free_step_identity_check(g, 10, 3);
    CHECK(r.max() < 1e-9);
    for (double rr : {0.05, 0.7, 5.0}) CHECK(resolvent_identity_check(g, rr).rel_error < 1e-8);
  }
}

TEST_CASE("next level and normalization") {
  GaussianLevel g = level(1, 9, 0.2);
  GaussianLevel n = g.next_level();
  CHECK(n.params().k == 2);
  CHECK(n.params().mu_bar_k == doctest::Approx(0.2 * 9.0));
  CHECK(n.fine().size() == g.fine().size());
  CHECK(std::isfinite(g.log_z_increment()));
  // log_z_increment is log det C^{1/2} plus the mass ratio; determinant part by eigenvalues.
  const Vector ev = sym_eigenvalues(g.C());
  CHECK(g.logdet_C() == doctest::Approx(ev.array().log().sum()).epsilon(1e-12));
}
