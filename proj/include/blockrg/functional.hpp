#pragma once

#include <array>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "blockrg/averaging.hpp"
#include "blockrg/gaussian_flow.hpp"
#include "blockrg/lattice.hpp"
#include "blockrg/polymer.hpp"

namespace blockrg {

using SiteList = std::shared_ptr<const std::vector<Index>>;

// coeff * spacing^d * sum over region sites of phi^p (d_mu phi)^q. For q > 0
// only sites whose forward neighbor in direction mu is in the region count.
struct Monomial {
  double coeff = 0.0;
  int field_power = 0;
  int grad_power = 0;
  int direction = 0;
  SiteList sites;
};

// Evaluator of a non-polynomial term. It must only read phi on `sites`.
struct OpaqueTerm {
  std::function<double(const Field&)> eval;
  SiteList sites;
  double domain_multiplier = 1.0;
};

struct PolymerTerm {
  std::vector<Monomial> monomials;
  std::vector<OpaqueTerm> opaque;
  bool polynomial() const { return opaque.empty(); }
};

// E(X, phi) for polymers X of cubes of continuum side L^cube_exp.
class LocalFunctional {
 public:
  LocalFunctional(const TorusLattice& lat, int cube_exp);

  const TorusLattice& lattice() const { return cubes_.fine(); }
  int cube_exp() const { return cube_exp_; }
  const BlockMap& cubes() const { return cubes_; }
  const CubeTorus& cube_torus() const { return torus_; }
  Polymer polymer(std::vector<Index> cube_list) const { return Polymer(torus_, std::move(cube_list)); }
  SiteList sites_of(const Polymer& X) const;
  double volume(const Polymer& X) const;

  void add_monomial(const Polymer& X, double coeff, int p, int q = 0, int mu = 0);
  void add_monomial(const Polymer& X, Monomial m);
  void add_opaque(const Polymer& X, OpaqueTerm t);
  void add_term(const Polymer& X, const PolymerTerm& t);

  const std::map<Polymer, PolymerTerm>& terms() const { return terms_; }
  bool has(const Polymer& X) const { return terms_.count(X) != 0; }
  const PolymerTerm& term(const Polymer& X) const;
  bool polynomial() const;

  double evaluate(const Polymer& X, const Field& phi) const;
  std::complex<double> evaluate(const Polymer& X, const ComplexField& phi) const;
  double total(const Field& phi) const;

  LocalFunctional operator+(const LocalFunctional& o) const;
  LocalFunctional operator*(double c) const;

 private:
  BlockMap cubes_;
  int cube_exp_;
  CubeTorus torus_;
  std::map<Polymer, PolymerTerm> terms_;
};

double evaluate_monomial(const Monomial& m, const Field& phi);
std::complex<double> evaluate_monomial(const Monomial& m, const ComplexField& phi);

// d^n/dt_1..dt_n E(X, phi0 + sum t_i f_i) at t = 0, n <= 4. Symbolic on
// monomials, Richardson-extrapolated central differences on opaque parts.
double derivative(const LocalFunctional& E, const Polymer& X, const Field& phi0, const std::vector<Field>& dirs);
double monomial_derivative(const Monomial& m, const Field& phi0, const std::vector<Field>& dirs);
double fd_derivative(const std::function<double(const Field&)>& f, const Field& phi0, const std::vector<Field>& dirs);
// n-th derivative of t -> E(X, phi0 + t f) at 0 by the trapezoid rule on the
// circle |t| = radius (polynomial terms only).
double cauchy_derivative(const LocalFunctional& E, const Polymer& X, const Field& phi0, const Field& f, int n,
                         double radius, int nodes = 16);

struct FieldDomainSpec {
  double lambda = 1e-3;
  double eps = 0.01;
  double alpha = 0.75;
  double rho = 1.0;
  int p = 3;
  int p0 = 1;

  double bound_phi() const;     // rho lambda^{-1/4-3eps}
  double bound_grad() const;    // rho lambda^{-1/4-2eps}
  double bound_holder() const;  // rho lambda^{-1/4-eps}
  double p_k() const;           // (-log lambda)^p
  double p0_k() const;
};

struct DomainCheck {
  bool ok = true;
  std::string failing;
  double phi_ratio = 0.0, grad_ratio = 0.0, holder_ratio = 0.0;  // value / bound
};
DomainCheck check_domain(const Field& phi, const FieldDomainSpec& spec);

enum class Certificate { upper, lower };
struct NormValue {
  double value = 0.0;
  Certificate kind = Certificate::upper;
};
NormValue norm_analytic(const LocalFunctional& E, const Polymer& X, const FieldDomainSpec& spec);
NormValue norm_sampled(const LocalFunctional& E, const Polymer& X, const FieldDomainSpec& spec, int random_samples,
                       unsigned seed);
// sup_X ||E(X)|| e^{kappa d_M(X)}.
NormValue global_norm(const LocalFunctional& E, const FieldDomainSpec& spec, double kappa, Certificate strategy,
                      int random_samples = 8, unsigned seed = 1);

// (BE)(Y) = sum over X with reblock(X) = Y of E(X); cubes grow by L.
LocalFunctional reblock(const LocalFunctional& E, int L);
// F_{L^{-1}}(X, phi) = F(LX, phi_L) on the lattice with spacing divided by L.
LocalFunctional scale_down(const LocalFunctional& F);

struct ExtractRecord {
  Polymer X;
  double alpha0 = 0.0;
  double alpha2 = 0.0;
  std::array<double, 3> alpha2mu{0.0, 0.0, 0.0};
  std::array<double, 3> bond_volume{0.0, 0.0, 0.0};
};

struct NormalizationResult {
  explicit NormalizationResult(LocalFunctional r) : remainder(std::move(r)) {}
  double epsilon = 0.0;
  double mu = 0.0;
  LocalFunctional remainder;
  std::vector<ExtractRecord> records;
  // Spread of the per-cube sums over all cubes (zero for translation-invariant E).
  double epsilon_spread = 0.0, mu_spread = 0.0;
  std::array<double, 3> reflection_sum{0.0, 0.0, 0.0};
  bool symmetric = true;
};
// Extraction of energy and mass terms on polymers with d_M < L_small.
NormalizationResult normalize(const LocalFunctional& E, int L_small, double symmetry_tol = 1e-8);
// The three normalization quantities for one polymer.
ExtractRecord extract(const LocalFunctional& E, const Polymer& X);
// Base point and unwrapped coordinate fields x_mu - x0_mu (continuum units) on X.
std::vector<Field> relative_coordinates(const LocalFunctional& E, const Polymer& X);

// Probes of the structural conditions; return max deviation.
double locality_probe(const LocalFunctional& E, const Polymer& X, const Field& phi, unsigned seed);
double evenness_probe(const LocalFunctional& E, const Polymer& X, const Field& phi);
// E(X + e, phi shifted) vs E(X, phi) for a one-cube translation along mu.
double translation_probe(const LocalFunctional& E, const Polymer& X, const Field& phi, int mu);

struct StrongFieldReport {
  bool member = false;
  std::string failing;
  bool phi_bound = true;   // |Phi| <= 2 p_k lambda^{-1/4}
  bool grad_bound = true;  // |d Phi| <= 3 p_k
  bool in_R = true;
  double phi_ratio = 0.0, grad_ratio = 0.0;
};
StrongFieldReport strong_field_facts(const GaussianLevel& g, const Field& Phi, const FieldDomainSpec& spec);

}  // namespace blockrg
