#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "blockrg/cluster.hpp"
#include "blockrg/functional.hpp"
#include "blockrg/gaussian_flow.hpp"

namespace blockrg {

// (epsilon_k, mu_k, lambda_k, E_k) with the Gaussian level they live on.
// E_k is a functional on the level-k fine lattice with cubes of side L^m.
struct FlowState {
  FlowState(GaussParams gp, double epsilon, double mu, double lambda, LocalFunctional E)
      : gauss(gp), epsilon(epsilon), mu(mu), lambda(lambda), E(std::move(E)) {}
  GaussParams gauss;
  double epsilon = 0.0;
  double mu = 0.0;
  double lambda = 0.0;
  LocalFunctional E;

  const TorusLattice& lattice() const { return E.lattice(); }
  int d() const { return lattice().d(); }
  int L() const { return gauss.L; }
};

// Level-k state on a d-dimensional torus of unit_side^d unit sites with
// cubes of side L^m and E_k = 0.
FlowState micro_state(int d, int L, Index unit_side, int k, int m, double lambda, double mu = 0.0,
                      double epsilon = 0.0, double a = 1.0, double mu_bar_k = 0.0);

struct StepControls {
  int quad_nodes = 5;  // per W site
  int n_max = 12;
  double kappa = 1.0;
  double eps = 0.01;
  double alpha = 0.75;
  double rho = 1.0;
  int p = 3;
  int p0 = 1;
  int norm_samples = 4;
  int probe_fields = 3;
  unsigned seed = 1;
  double lambda_threshold = 1e-2;
  double eps0_margin = 10.0;
  Caps caps;

  FieldDomainSpec spec(double lambda) const;
};

// V_k on one cube and the whole lattice.
double potential_term(const FlowState& s, const Polymer& cube, const Field& phi);
double potential_total(const FlowState& s, const Field& phi);
// E_k^+ = E_k - V_k with V_k placed on single cubes.
LocalFunctional e_plus(const FlowState& s);
double delta_eplus(const LocalFunctional& Eplus, const Polymer& X, const Field& phi, const Field& Wcal);

// Localization of (B dE+)(Y) in W for a fixed phi. Cubes of side LM are the
// cells; W lives on the unit lattice.
class Localization {
 public:
  Localization(const FlowState& s, const GaussianLevel& g, const Field& phi);

  int n_cells() const { return n_cells_; }
  const CubeTorus& torus() const { return torus_; }
  const std::vector<std::vector<int>>& cell_sites() const { return cell_sites_; }
  int n_w() const { return n_w_; }
  // Cell masks of the reblocked polymers of E^+.
  std::vector<CellMask> blocks() const;

  // (B dE+)(Y, phi, M_T W) with the push kept on the components of T.
  double reblocked(CellMask Y, CellMask T, const double* W) const;
  // int ds_{Z-Y} d/ds_{Z-Y} at s_{Z^c} = 0, s_Y = 1, by corner inclusion-exclusion.
  double piece(CellMask Y, CellMask Z, const double* W) const;
  // (dE+)^loc(Z) = sum over Y in Z.
  double local(CellMask Z, const double* W) const;
  // dE+(phi, W_k) directly.
  double total(const double* W) const;

  // Connected Z within the cap, each holding at least one Y.
  std::vector<CellMask> supports(int max_cells) const;
  const Matrix& push(CellMask T) const { return push_[T]; }

 private:
  struct Block {
    CellMask Y;
    std::vector<Polymer> X;
    std::vector<double> base;  // E^+(X, phi)
    std::vector<Index> sites;  // fine sites of Y
  };
  const Block* block(CellMask Y) const;

  LocalFunctional Eplus_;
  Field phi_;
  CubeTorus torus_;
  int n_cells_ = 0;
  int n_w_ = 0;
  std::vector<std::vector<int>> cell_sites_;
  std::vector<int> fine_cell_;
  std::vector<Block> blocks_;
  std::vector<Matrix> push_;  // by mask
  Matrix full_push_;
};

struct FluctuationResult {
  double epsilon0 = 0.0;
  std::map<CellMask, double> E_sharp;  // E#(Y, phi)
  ClusterResult cluster;
  double log_xi_cluster = 0.0;  // sum_Y E#(Y)
  double log_xi_direct = 0.0;   // log int exp(dE+) dmu* by tensor quadrature
  std::map<CellMask, double> disconnected;  // E# on disconnected masks
};

// Xi'_k at phi through the cluster expansion of the localized dE+.
FluctuationResult fluctuation_integral(const FlowState& s, const GaussianLevel& g, const Field& phi,
                                       const StepControls& c, bool direct_check = true);
double epsilon0(const StepControls& c, double lambda);

// E#_k as a functional with one opaque term per cube-of-side-LM polymer.
LocalFunctional e_sharp_functional(const FlowState& s, const StepControls& c);

struct StepPieces {
  StepPieces(LocalFunctional L3E, LocalFunctional Estar, LocalFunctional Enext)
      : L3E(std::move(L3E)), E_star(std::move(Estar)), E_next(std::move(Enext)) {}
  double L1E = 0.0, L2E = 0.0;
  LocalFunctional L3E;
  double epsilon0 = 0.0;
  double epsilon_star = 0.0, mu_star = 0.0;
  LocalFunctional E_star;
  LocalFunctional E_next;
  double epsilon_next = 0.0, mu_next = 0.0, lambda_next = 0.0;
  GaussParams gauss_next;
};

// The recursion without the report: B, scaling, normalization, assembly.
StepPieces step_pieces(const FlowState& s, const StepControls& c);

struct BoundCheck {
  std::string name;
  double value = 0.0;
  double envelope = 0.0;  // power structure with unit prefactor
  double prefactor = 0.0;  // value / envelope
};

struct StepReport {
  double lambda_k = 0.0, lambda_next = 0.0;
  double mu_bar_k = 0.0, mu_bar_next = 0.0, mu_bar_schedule_error = 0.0;
  double E_norm_in = 0.0;
  double epsilon0 = 0.0, epsilon0_bound = 0.0;
  bool epsilon0_ok = true;
  double chi_ratio = 0.0;  // max over probes of the S_k bound ratios
  bool chi_ok = true;
  double audit_change_of_variables = 0.0;
  double audit_w_substitution = 0.0;
  double audit_assembly = 0.0;   // log Xi_k against -eps0 Vol + E^+ + E#
  double audit_final_form = 0.0;  // scaled density against the new couplings
  double telescope_error = 0.0;
  double disconnected_max = 0.0;
  double locality_error = 0.0;
  double xi_error = 0.0;  // |sum E# - log Xi'| over probe fields
  TailEstimate tail;
  double evenness_error = 0.0;
  double renormalization_residual = 0.0;
  std::vector<BoundCheck> bounds;
  double seconds = 0.0;
};

struct StepResult {
  FlowState next;
  StepPieces pieces;
  StepReport report;
};

// One modified RG step. Refuses to step when |mu| > lambda^{1/2}, ||E|| > 1
// or lambda exceeds the configured threshold.
StepResult rg_step(const FlowState& s, const StepControls& c);

struct PowerStructureReport {
  std::vector<double> lambdas;
  std::vector<double> mu_star_prefactor;
  std::vector<double> E_star_prefactor;
  bool mu_ok = true;
  bool E_ok = true;
};
// Steps at decreasing lambda; prefactors must not grow as lambda decreases.
PowerStructureReport power_structure(int d, int L, Index unit_side, const std::vector<double>& lambdas,
                                     const StepControls& c);

struct DerivativeReport {
  double dmu_dmu = 0.0, dmu_dE = 0.0, dE_dmu = 0.0, dE_dE = 0.0;
  double forward_vs_symmetric = 0.0;  // relative, for dmu*/dmu
  std::vector<BoundCheck> envelopes;
};
// Difference quotients of mu*, E* at an interior state along mu and a fixed
// normalized direction in E.
DerivativeReport cauchy_derivatives(const FlowState& s, const StepControls& c);

}  // namespace blockrg
