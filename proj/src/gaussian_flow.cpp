#include "blockrg/gaussian_flow.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "blockrg/error.hpp"
#include "blockrg/linalg.hpp"
#include "blockrg/quadrature.hpp"

namespace blockrg {

double a_k_closed(double a, int L, int k) {
  if (k < 0) throw ConfigError("a_k: negative level");
  if (k == 0) return std::numeric_limits<double>::infinity();
  double l2 = 1.0 / (static_cast<double>(L) * L);
  return a * (1.0 - l2) / (1.0 - dpow(l2, k));
}

double a_k_step(double a_k, double a, int L) {
  double b = a / (static_cast<double>(L) * L);
  if (std::isinf(a_k)) return a;
  return a_k * a / (a_k + b);
}

double mu_bar_schedule(double mu_bar, int L, int N, int k) { return dpow(L, -2 * (N - k)) * mu_bar; }

double lambda_scale_factor(int L, int d) { return dpow(L, 4 - d); }

double lambda_schedule(double lambda, int L, int N, int k, int d) {
  return std::pow(lambda_scale_factor(L, d), -(N - k)) * lambda;
}

double GaussParams::a_k() const { return a_k_closed(a, L, k); }

double GaussParams::c_mix() const {
  double ak = a_k();
  if (std::isinf(ak)) return 0.0;
  return b() / (ak + b());
}

GaussianLevel::GaussianLevel(const TorusLattice& fine, const GaussParams& p)
    : p_(p),
      Qk_(fine, p.k),
      Q_(Qk_.coarse(), 1),
      Qk1_(fine, p.k + 1),
      cache_(std::make_shared<Cache>()) {
  if (fine.spacing_exp() != -p.k) throw ConfigError("GaussianLevel: fine lattice spacing must be L^{-k}");
  if (fine.L() != p.L) throw ConfigError("GaussianLevel: L mismatch");
  if (!(p.a > 0.0)) throw ConfigError("GaussianLevel: a must be positive");
  if (p.mu_bar_k < 0.0) throw ConfigError("GaussianLevel: mu_bar must be nonnegative");
}

GaussianLevel GaussianLevel::next_level() const {
  GaussParams q = p_;
  q.k += 1;
  q.mu_bar_k = p_.mu_bar_k * p_.L * p_.L;
  return GaussianLevel(fine().scaled_down(), q);
}

template <class F>
const Matrix& GaussianLevel::memo(std::optional<Matrix>& slot, F f) const {
  std::lock_guard<std::recursive_mutex> lk(cache_->m);
  if (!slot) slot = f();
  return *slot;
}

void GaussianLevel::require_positive_k(const char* what) const {
  if (p_.k < 1) throw DomainError(std::string(what) + " needs k >= 1");
}

Matrix GaussianLevel::free_part() const {
  Matrix A = -laplacian_matrix(fine());
  A.diagonal().array() += p_.mu_bar_k;
  return A;
}

const Matrix& GaussianLevel::op() const {
  return memo(cache_->op, [&] {
    require_positive_k("op");
    return Matrix(free_part() + p_.a_k() * Qk_.projection_matrix());
  });
}

const Matrix& GaussianLevel::G() const {
  return memo(cache_->G, [&] { return spd_inverse(op()); });
}

const Matrix& GaussianLevel::Delta() const {
  return memo(cache_->Delta, [&] {
    if (p_.k == 0) return free_part();
    double ak = p_.a_k();
    Matrix D = -ak * ak * (Qk_.q_matrix() * G() * Qk_.qt_matrix());
    D.diagonal().array() += ak;
    return symmetrized(D);
  });
}

const Matrix& GaussianLevel::C_inverse() const {
  return memo(cache_->Cinv, [&] { return Matrix(Delta() + p_.b() * Q_.projection_matrix()); });
}

const Matrix& GaussianLevel::C() const {
  return memo(cache_->C, [&] { return spd_inverse(C_inverse()); });
}

const Matrix& GaussianLevel::sqrtC() const {
  return memo(cache_->sqrtC, [&] { return sym_sqrt(C()); });
}

const Matrix& GaussianLevel::G0_next() const {
  return memo(cache_->G0, [&] {
    double c = p_.a_next() * p_.b();
    return spd_inverse(free_part() + c * Qk1_.projection_matrix());
  });
}

const Matrix& GaussianLevel::fluct_push() const {
  return memo(cache_->push, [&] {
    require_positive_k("fluct_push");
    return Matrix(p_.a_k() * G() * Qk_.qt_matrix() * sqrtC());
  });
}

double GaussianLevel::logdet_C() const {
  std::lock_guard<std::recursive_mutex> lk(cache_->m);
  if (!cache_->logdetC) cache_->logdetC = -spd_logdet(C_inverse());
  return *cache_->logdetC;
}

double GaussianLevel::log_z_increment() const {
  const double two_pi = 2.0 * std::numbers::pi;
  double n1 = static_cast<double>(coarse().size()), n0 = static_cast<double>(unit().size());
  return 0.5 * n1 * std::log(p_.a / two_pi) + 0.5 * n0 * std::log(two_pi) + 0.5 * logdet_C();
}

Field GaussianLevel::phi(const Field& Phi) const {
  if (Phi.lattice() != unit()) throw ConfigError("phi: Phi must live on the unit lattice");
  if (p_.k == 0) return Phi;
  return Field(fine(), p_.a_k() * (G() * Qk_.qt_matrix() * Phi.values()));
}

Field GaussianLevel::phi0_next(const Field& Phi_next) const {
  if (Phi_next.lattice() != coarse()) throw ConfigError("phi0_next: field must live on T^1");
  double c = p_.b() * p_.a_next();
  return Field(fine(), c * (G0_next() * Qk1_.qt_matrix() * Phi_next.values()));
}

Field GaussianLevel::psi(const Field& Phi_next, const Field& phi) const {
  require_positive_k("psi");
  double c = p_.c_mix();
  Field q1 = Qk1_.apply_q(phi);
  return Qk_.apply_q(phi) + Q_.apply_qt(Phi_next - q1) * c;
}

Field GaussianLevel::cal_z(const Field& Z) const {
  require_positive_k("cal_z");
  return Field(fine(), p_.a_k() * (G() * Qk_.qt_matrix() * Z.values()));
}

namespace {
double gradient_sq(const Field& f) {
  double s = 0.0;
  for (int mu = 0; mu < f.lattice().d(); ++mu) s += norm_sq(forward_derivative(f, mu));
  return s;
}
}  // namespace

double GaussianLevel::S(const Field& Phi, const Field& phi) const {
  require_positive_k("S");
  return 0.5 * p_.a_k() * norm_sq(Phi - Qk_.apply_q(phi)) + 0.5 * gradient_sq(phi) + 0.5 * p_.mu_bar_k * norm_sq(phi);
}

double GaussianLevel::S0_next(const Field& Phi_next, const Field& phi) const {
  double l2 = static_cast<double>(p_.L) * p_.L;
  return 0.5 * p_.a_next() / l2 * norm_sq(Phi_next - Qk1_.apply_q(phi)) + 0.5 * gradient_sq(phi) +
         0.5 * p_.mu_bar_k * norm_sq(phi);
}

double GaussianLevel::J(const Field& Phi_next, const Field& Phi, const Field& phi) const {
  return 0.5 * p_.b() * norm_sq(Phi_next - Q_.apply_q(Phi)) + S(Phi, phi);
}

double GaussianLevel::fluct_form(const Field& Z) const { return 0.5 * Z.values().dot(C_inverse() * Z.values()); }

Matrix GaussianLevel::A_r(double r) const {
  require_positive_k("A_r");
  if (r < 0.0) throw DomainError("A_r: r must be nonnegative");
  double ak = p_.a_k();
  Matrix P = Q_.projection_matrix();
  Matrix I = Matrix::Identity(P.rows(), P.cols());
  return (I - P) / (ak + r) + P / (ak + p_.b() + r);
}

Matrix GaussianLevel::G_r(double r) const {
  double ak = p_.a_k();
  Matrix M = op() - ak * ak * (Qk_.qt_matrix() * A_r(r) * Qk_.q_matrix());
  return spd_inverse(symmetrized(M));
}

Matrix GaussianLevel::G_r_explicit(double r) const {
  require_positive_k("G_r_explicit");
  double ak = p_.a_k(), b = p_.b();
  double c1 = ak * r / (ak + r);
  double c2 = ak * ak * b / ((ak + r) * (ak + b + r));
  return spd_inverse(free_part() + c1 * Qk_.projection_matrix() + c2 * Qk1_.projection_matrix());
}

Matrix GaussianLevel::C_r_direct(double r) const {
  Matrix M = C_inverse();
  M.diagonal().array() += r;
  return spd_inverse(M);
}

Matrix GaussianLevel::C_r_composite(double r) const {
  double ak = p_.a_k();
  Matrix A = A_r(r);
  return symmetrized(A + ak * ak * (A * Qk_.q_matrix() * G_r(r) * Qk_.qt_matrix() * A));
}

double IdentityReport::max() const {
  return std::max({fifty, potpie, someday, eighty, delta_form, scaling, action_scaling});
}

namespace {
Field random_field(const TorusLattice& lat, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Field f(lat);
  for (Index i = 0; i < lat.size(); ++i) f[i] = nd(rng);
  return f;
}
double rel(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }
double rel_inf(const Field& a, const Field& b) {
  double s = std::max({1.0, sup_norm(a), sup_norm(b)});
  return sup_norm(a - b) / s;
}
}  // namespace

IdentityReport free_step_identity_check(const GaussianLevel& g, int samples, unsigned seed) {
  std::mt19937_64 rng(seed);
  IdentityReport rep;
  const GaussParams& p = g.params();
  double ak = p.a_k(), b = p.b(), l2 = static_cast<double>(p.L) * p.L;
  GaussianLevel next = g.next_level();
  for (int s = 0; s < samples; ++s) {
    Field Phi_n = random_field(g.coarse(), rng);
    Field Z = random_field(g.unit(), rng);
    Field phi0 = g.phi0_next(Phi_n);
    Field Psi = g.psi(Phi_n, phi0);

    double lhs = 0.5 * b * norm_sq(Phi_n - g.Q().apply_q(Psi)) + 0.5 * ak * norm_sq(Psi - g.Qk().apply_q(phi0));
    double rhs = 0.5 * p.a_next() / l2 * norm_sq(Phi_n - g.Qk1().apply_q(phi0));
    rep.fifty = std::max(rep.fifty, rel(lhs, rhs));

    Field pl = Phi_n - g.Q().apply_q(Psi);
    Field pr = (Phi_n - g.Qk1().apply_q(phi0)) * (ak / (ak + b));
    rep.potpie = std::max(rep.potpie, rel_inf(pl, pr));

    rep.someday = std::max(rep.someday, rel_inf(g.phi(Psi), phi0));

    double jv = g.J(Phi_n, Psi + Z, phi0 + g.cal_z(Z));
    double ev = g.S0_next(Phi_n, phi0) + g.fluct_form(Z);
    rep.eighty = std::max(rep.eighty, rel(jv, ev));

    Field Phi = random_field(g.unit(), rng);
    double sv = g.S(Phi, g.phi(Phi));
    double qv = 0.5 * Phi.values().dot(g.Delta() * Phi.values());
    rep.delta_form = std::max(rep.delta_form, rel(sv, qv));

    Field Phi1 = random_field(next.unit(), rng);
    Field up = scale_field(Phi1, ScaleDirection::up);
    Field lhs_phi = g.phi0_next(up);
    Field rhs_phi = scale_field(next.phi(Phi1), ScaleDirection::up);
    rep.scaling = std::max(rep.scaling, rel_inf(lhs_phi, rhs_phi));

    Field phi1 = random_field(next.fine(), rng);
    double s0 = g.S0_next(up, scale_field(phi1, ScaleDirection::up));
    double s1 = next.S(Phi1, phi1);
    rep.action_scaling = std::max(rep.action_scaling, rel(s0, s1));
  }
  return rep;
}

ResolventReport resolvent_identity_check(const GaussianLevel& g, double r) {
  ResolventReport rep;
  rep.r = r;
  Matrix direct = g.C_r_direct(r);
  Matrix comp = g.C_r_composite(r);
  rep.abs_error = max_abs_diff(direct, comp);
  rep.rel_error = rep.abs_error / max_abs(direct);
  Matrix ga = g.G_r(r), ge = g.G_r_explicit(r);
  rep.alt_vs_explicit = max_abs_diff(ga, ge) / max_abs(ge);
  return rep;
}

namespace {
Matrix panel(const Matrix& Cinv, double lo, double hi, const Rule1D& base) {
  Matrix acc = Matrix::Zero(Cinv.rows(), Cinv.cols());
  Matrix I = Matrix::Identity(Cinv.rows(), Cinv.cols());
  double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  for (std::size_t i = 0; i < base.size(); ++i) {
    double t = mid + half * base.nodes[i];
    double c = std::cos(t), s = std::sin(t);
    acc += half * base.weights[i] * spd_inverse(c * c * Cinv + s * s * I);
  }
  return acc;
}

Matrix adaptive(const Matrix& Cinv, double lo, double hi, double tol, int depth, const Rule1D& r1, const Rule1D& r2) {
  Matrix coarse = panel(Cinv, lo, hi, r1);
  Matrix fine = panel(Cinv, lo, hi, r2);
  if (max_abs_diff(coarse, fine) < tol || depth >= 12) return fine;
  double mid = 0.5 * (lo + hi);
  return adaptive(Cinv, lo, mid, 0.5 * tol, depth + 1, r1, r2) + adaptive(Cinv, mid, hi, 0.5 * tol, depth + 1, r1, r2);
}
}  // namespace

Matrix sqrt_covariance_integral(const GaussianLevel& g, double tol) {
  Rule1D r1 = gauss_legendre(8), r2 = gauss_legendre(16);
  Matrix I = adaptive(g.C_inverse(), 0.0, 0.5 * std::numbers::pi, tol, 0, r1, r2);
  return (2.0 / std::numbers::pi) * I;
}

double gaussian_log_mass(const GaussianLevel& g) {
  double n = static_cast<double>(g.unit().size());
  return 0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * spd_logdet(g.Delta());
}

}  // namespace blockrg
