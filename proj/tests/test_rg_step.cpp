#include <cmath>
#include <random>

#include "doctest.h"

#include "blockrg/error.hpp"
#include "blockrg/rg_step.hpp"

using namespace blockrg;

namespace {

Field smooth_field(const TorusLattice& lat, double amp) {
  Field phi(lat);
  for (Index i = 0; i < lat.size(); ++i) phi[i] = amp * std::sin(static_cast<double>(i));
  return phi;
}

const StepResult& micro_result() {
  static const StepResult r = rg_step(micro_state(1, 3, 6, 1, 0, 1e-3), StepControls{});
  return r;
}

}  // namespace

TEST_CASE("potential on constant fields") {
  FlowState s = micro_state(1, 3, 6, 1, 0, 0.2, 0.05, 0.01);
  const double c = 1.3;
  const Field phi = Field::constant(s.lattice(), c);
  // One unit cube has volume one.
  const double per_cube = 0.01 + 0.5 * 0.05 * c * c + 0.25 * 0.2 * std::pow(c, 4);
  CHECK(potential_term(s, s.E.polymer({2}), phi) == doctest::Approx(per_cube).epsilon(1e-14));
  CHECK(potential_total(s, phi) == doctest::Approx(6.0 * per_cube).epsilon(1e-14));
  CHECK_THROWS_AS(potential_term(s, s.E.polymer({2, 3}), phi), ConfigError);
  const Field psi = smooth_field(s.lattice(), 0.7);
  CHECK(e_plus(s).total(psi) == doctest::Approx(s.E.total(psi) - potential_total(s, psi)).epsilon(1e-14));
}

TEST_CASE("micro state layout") {
  FlowState s = micro_state(1, 3, 6, 1, 0, 1e-3);
  CHECK(s.lattice().size() == 18);
  CHECK(s.E.cube_torus().count() == 6);
  CHECK_THROWS_AS(micro_state(1, 3, 4, 1, 0, 1e-3), ConfigError);
}

TEST_CASE("localization telescopes to the full fluctuation") {
  FlowState s = micro_state(1, 3, 6, 1, 0, 1e-3);
  GaussianLevel g(s.lattice(), s.gauss);
  const Field phi = smooth_field(s.lattice(), 0.3);
  Localization loc(s, g, phi);
  CHECK(loc.n_cells() == 2);
  CHECK(loc.n_w() == 6);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 3; ++t) {
    std::vector<double> W(6);
    for (double& w : W) w = u(rng);
    double sum = 0.0;
    for (CellMask Z : loc.supports(loc.n_cells())) sum += loc.local(Z, W.data());
    CHECK(sum == doctest::Approx(loc.total(W.data())).epsilon(1e-12));
    // With the push kept on all cells the reblocked sum is the full fluctuation.
    double whole = 0.0;
    for (CellMask Y : loc.blocks()) whole += loc.reblocked(Y, 3u, W.data());
    CHECK(whole == doctest::Approx(loc.total(W.data())).epsilon(1e-12));
  }
}

TEST_CASE("fluctuation integral against direct quadrature") {
  FlowState s = micro_state(1, 3, 6, 1, 0, 1e-3);
  GaussianLevel g(s.lattice(), s.gauss);
  StepControls c;
  FluctuationResult f = fluctuation_integral(s, g, smooth_field(s.lattice(), 0.5), c, true);
  CHECK(std::abs(f.log_xi_cluster - f.log_xi_direct) < 1e-7);
  for (const auto& [Y, v] : f.disconnected) CHECK(std::abs(v) < 1e-12);
  CHECK(f.epsilon0 <= epsilon0(c, 1e-3) * c.eps0_margin);
}

TEST_CASE("one step on the micro instance") {
  const StepResult& r = micro_result();
  const StepReport& rep = r.report;
  CHECK(rep.lambda_next == doctest::Approx(27e-3).epsilon(1e-15));
  CHECK(r.next.lambda == doctest::Approx(27e-3).epsilon(1e-15));
  CHECK(rep.xi_error < 1e-7);
  CHECK(rep.audit_change_of_variables < 1e-9);
  CHECK(rep.audit_w_substitution < 1e-9);
  CHECK(rep.audit_assembly < 1e-9);
  CHECK(rep.audit_final_form < 1e-9);
  CHECK(rep.telescope_error < 1e-12);
  CHECK(rep.disconnected_max < 1e-12);
  CHECK(rep.locality_error < 1e-12);
  CHECK(rep.evenness_error < 1e-12);
  CHECK(rep.renormalization_residual < 1e-10);
  CHECK(rep.chi_ok);
  CHECK(rep.epsilon0_ok);
  CHECK(rep.tail.summable);
  CHECK(rep.mu_bar_schedule_error == 0.0);
  // E_k = 0: the linear pieces vanish and the new couplings come from the fluctuation.
  CHECK(r.pieces.L1E == 0.0);
  CHECK(r.pieces.L2E == 0.0);
  CHECK(r.pieces.mu_next == doctest::Approx(r.pieces.mu_star).epsilon(1e-15));
  CHECK(r.pieces.epsilon_next == doctest::Approx(r.pieces.epsilon_star).epsilon(1e-15));
  CHECK(r.pieces.mu_star > 0.0);
  for (const BoundCheck& b : rep.bounds) {
    INFO(b.name);
    CHECK(b.prefactor <= 1.0);
  }
}

TEST_CASE("the step refuses states outside the hypotheses") {
  StepControls c;
  CHECK_THROWS(rg_step(micro_state(1, 3, 6, 1, 0, 1e-3, 0.5), c));
  CHECK_THROWS(rg_step(micro_state(1, 3, 6, 1, 0, 0.5), c));
}

TEST_CASE("power structure of the step maps") {
  PowerStructureReport p = power_structure(1, 3, 6, {1e-3, 1e-4}, StepControls{});
  CHECK(p.mu_ok);
  CHECK(p.E_ok);
  REQUIRE(p.mu_star_prefactor.size() == 2);
  CHECK(p.mu_star_prefactor[1] <= p.mu_star_prefactor[0]);
}
