#pragma once

#include <memory>
#include <mutex>
#include <optional>

#include "blockrg/averaging.hpp"
#include "blockrg/lattice.hpp"

namespace blockrg {

double a_k_closed(double a, int L, int k);
// a_{k+1} from a_k.
double a_k_step(double a_k, double a, int L);
double mu_bar_schedule(double mu_bar, int L, int N, int k);
// L^{-(4-d)(N-k)} lambda; the quartic coupling has scaling exponent 4 - d.
double lambda_schedule(double lambda, int L, int N, int k, int d = 3);
double lambda_scale_factor(int L, int d);

struct GaussParams {
  int L = 3;
  double a = 1.0;
  int k = 1;
  double mu_bar_k = 0.0;

  // a_k; +infinity at k = 0.
  double a_k() const;
  double a_next() const { return a_k_closed(a, L, k + 1); }
  double b() const { return a / (static_cast<double>(L) * L); }
  // aL^{-2} / (a_k + aL^{-2}).
  double c_mix() const;
};

// Gaussian objects at level k on the fine lattice T^{-k}. Heavy matrices are
// computed on first use and cached; the cache is shared between copies.
class GaussianLevel {
 public:
  GaussianLevel(const TorusLattice& fine, const GaussParams& p);

  const TorusLattice& fine() const { return Qk_.fine(); }
  const TorusLattice& unit() const { return Qk_.coarse(); }
  const TorusLattice& coarse() const { return Q_.coarse(); }
  const BlockMap& Qk() const { return Qk_; }
  const BlockMap& Q() const { return Q_; }
  const BlockMap& Qk1() const { return Qk1_; }
  const GaussParams& params() const { return p_; }

  // Level k+1 on the same sites (spacing divided by L, mu_bar times L^2).
  GaussianLevel next_level() const;

  const Matrix& op() const;  // -Lap + mu_bar_k + a_k Q_k^T Q_k
  const Matrix& G() const;
  const Matrix& Delta() const;
  const Matrix& C_inverse() const;  // Delta_k + aL^{-2} Q^T Q
  const Matrix& C() const;
  const Matrix& sqrtC() const;
  const Matrix& G0_next() const;
  // a_k G_k Q_k^T C_k^{1/2}: unit-lattice W to fine-lattice fluctuation.
  const Matrix& fluct_push() const;
  double logdet_C() const;
  // log(Z_{k+1}/Z_k) in scaled variables.
  double log_z_increment() const;

  Field phi(const Field& Phi) const;
  Field phi0_next(const Field& Phi_next) const;
  Field psi(const Field& Phi_next, const Field& phi) const;
  Field cal_z(const Field& Z) const;

  double S(const Field& Phi, const Field& phi) const;
  double S0_next(const Field& Phi_next, const Field& phi) const;
  double J(const Field& Phi_next, const Field& Phi, const Field& phi) const;
  double fluct_form(const Field& Z) const;

  Matrix A_r(double r) const;
  Matrix G_r(double r) const;           // Q_k form with A_{k,r}
  Matrix G_r_explicit(double r) const;  // Q_k, Q_{k+1} form
  Matrix C_r_direct(double r) const;
  Matrix C_r_composite(double r) const;

 private:
  struct Cache {
    std::recursive_mutex m;
    std::optional<Matrix> op, G, Delta, Cinv, C, sqrtC, G0, push;
    std::optional<double> logdetC;
  };
  template <class F>
  const Matrix& memo(std::optional<Matrix>& slot, F f) const;
  void require_positive_k(const char* what) const;
  Matrix free_part() const;  // -Lap + mu_bar_k on the fine lattice

  GaussParams p_;
  BlockMap Qk_;
  BlockMap Q_;
  BlockMap Qk1_;
  std::shared_ptr<Cache> cache_;
};

struct IdentityReport {
  double fifty = 0.0;       // minimum identity residual
  double potpie = 0.0;
  double someday = 0.0;     // phi_k(Psi_k) - phi0
  double eighty = 0.0;      // expansion identity residual
  double delta_form = 0.0;  // S_k(Phi, phi_k) - 1/2 <Phi, Delta_k Phi>
  double scaling = 0.0;     // phi0_{k+1}(Phi_L) - [phi_{k+1}(Phi)]_L
  double action_scaling = 0.0;
  double max() const;
};

// Random-field replay of the single-step identities. Values are relative to
// the size of the compared quantities.
IdentityReport free_step_identity_check(const GaussianLevel& g, int samples, unsigned seed);

struct ResolventReport {
  double r = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  double alt_vs_explicit = 0.0;
};
ResolventReport resolvent_identity_check(const GaussianLevel& g, double r);

// (2/pi) int_0^{pi/2} (cos^2 t C^{-1} + sin^2 t)^{-1} dt with adaptive
// Gauss-Legendre panels; equals C^{1/2}.
Matrix sqrt_covariance_integral(const GaussianLevel& g, double tol);

// Log of the total mass of exp(-1/2 <Phi, Delta_k Phi>) dPhi without Z_k.
double gaussian_log_mass(const GaussianLevel& g);

}  // namespace blockrg
