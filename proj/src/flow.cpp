#include "blockrg/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <tuple>

#include "blockrg/error.hpp"

namespace blockrg {

double FlowParams::lambda_k(int k) const { return lambda_schedule(lambda, L, N(), k, d); }

FlowSequence FlowSequence::zero(const FlowParams& p, int n_E) {
  FlowSequence s;
  s.mu.assign(static_cast<std::size_t>(p.K + 1), 0.0);
  s.E.assign(static_cast<std::size_t>(p.K + 1), Vector::Zero(n_E));
  for (int k = 0; k <= p.K; ++k) s.lambda.push_back(p.lambda_k(k));
  return s;
}

double seq_norm(const FlowSequence& s, const StepMaps& m, double beta) {
  double n = 0.0;
  for (std::size_t k = 0; k < s.mu.size(); ++k) {
    const double lam = s.lambda[k];
    n = std::max(n, std::abs(s.mu[k]) * std::pow(lam, -0.5 - beta));
    n = std::max(n, m.e_norm(s.E[k]) * std::pow(lam, -beta));
  }
  return n;
}

double seq_distance(const FlowSequence& a, const FlowSequence& b, const StepMaps& m, double beta) {
  FlowSequence d = a;
  for (std::size_t k = 0; k < a.mu.size(); ++k) {
    d.mu[k] -= b.mu[k];
    d.E[k] -= b.E[k];
  }
  return seq_norm(d, m, beta);
}

FlowSequence apply_T(const FlowSequence& s, const StepMaps& m, const FlowParams& p, bool parallel) {
  const int K = s.K();
  FlowSequence out = s;
  const double Lm2 = 1.0 / (static_cast<double>(p.L) * p.L);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int k = 0; k <= K; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    if (k == K) {
      out.mu[ku] = 0.0;
    } else {
      out.mu[ku] = Lm2 * (s.mu[ku + 1] - m.L2(k, s.lambda[ku], s.E[ku]) -
                          m.mu_star(k, s.lambda[ku], s.mu[ku], s.E[ku]));
    }
    if (k == 0) {
      out.E[ku] = Vector::Zero(m.n_E);
    } else {
      out.E[ku] = m.L3(k - 1, s.lambda[ku - 1], s.E[ku - 1]) +
                  m.E_star(k - 1, s.lambda[ku - 1], s.mu[ku - 1], s.E[ku - 1]);
    }
  }
  return out;
}

double fixed_point_residual(const FlowSequence& s, const StepMaps& m, const FlowParams& p) {
  FlowSequence t = apply_T(s, m, p, false);
  double r = 0.0;
  for (std::size_t k = 0; k < s.mu.size(); ++k) {
    r = std::max(r, std::abs(t.mu[k] - s.mu[k]));
    r = std::max(r, (t.E[k] - s.E[k]).cwiseAbs().maxCoeff());
  }
  return r;
}

double forward_residual(const FlowSequence& s, const StepMaps& m, const FlowParams& p) {
  const double L2 = static_cast<double>(p.L) * p.L;
  double r = 0.0;
  for (int k = 0; k < s.K(); ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double next = L2 * s.mu[ku] + m.L2(k, s.lambda[ku], s.E[ku]) + m.mu_star(k, s.lambda[ku], s.mu[ku], s.E[ku]);
    r = std::max(r, std::abs(next - s.mu[ku + 1]));
  }
  return r;
}

FixedPoint solve_fixed_point(const StepMaps& m, const FlowParams& p, double tol, int max_iter,
                             const FlowSequence* start) {
  if (p.K < 1) throw ConfigError("K must be positive");
  FlowSequence x = start ? *start : FlowSequence::zero(p, m.n_E);
  x.mu.back() = 0.0;
  x.E.front() = Vector::Zero(m.n_E);
  ConvergenceReport rep;
  int bad = 0;
  const double floor = 1e3 * std::numeric_limits<double>::epsilon();
  for (int it = 0; it < max_iter; ++it) {
    FlowSequence y = apply_T(x, m, p);
    const double diff = seq_distance(y, x, m, p.beta);
    rep.diffs.push_back(diff);
    rep.iterations = it + 1;
    x = std::move(y);
    const std::size_t n = rep.diffs.size();
    if (n >= 2 && rep.diffs[n - 2] > floor * std::max(1.0, seq_norm(x, m, p.beta))) {
      const double r = diff / rep.diffs[n - 2];
      rep.ratios.push_back(r);
      rep.max_ratio = std::max(rep.max_ratio, r);
      bad = r >= 1.0 ? bad + 1 : 0;
      if (bad >= 3) throw NumericalError("Picard iteration is not contracting");
    }
    if (diff <= tol) {
      rep.converged = true;
      break;
    }
  }
  rep.residual = fixed_point_residual(x, m, p);
  rep.forward_residual = forward_residual(x, m, p);
  rep.norm = seq_norm(x, m, p.beta);
  rep.in_B1 = rep.norm < 1.0;
  return FixedPoint{std::move(x), std::move(rep)};
}

VacuumReport vacuum_energy_backfill(const FlowSequence& s, const StepMaps& m, const FlowParams& p) {
  const int K = s.K();
  const double Ld = dpow(p.L, p.d);
  VacuumReport r;
  r.epsilon.assign(static_cast<std::size_t>(K + 1), 0.0);
  r.envelope.assign(static_cast<std::size_t>(K + 1), 0.0);
  std::vector<double> src(static_cast<std::size_t>(K + 1), 0.0);
  for (int k = 0; k < K; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    src[ku] = m.L1(k, s.lambda[ku], s.E[ku]) + m.eps_star(k, s.lambda[ku], s.mu[ku], s.E[ku]);
    r.b = std::max(r.b, std::abs(src[ku]) / (Ld * std::pow(s.lambda[ku], p.beta)));
  }
  for (int k = K - 1; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    r.epsilon[ku] = (r.epsilon[ku + 1] - src[ku]) / Ld;
  }
  const double q = std::pow(static_cast<double>(p.L), (4 - p.d) * p.beta - p.d);
  double S = 0.0;
  for (int n = 1; n <= K; ++n) {
    S += std::pow(q, n - 1);
    const auto ku = static_cast<std::size_t>(K - n);
    r.envelope[ku] = r.b * S * std::pow(s.lambda[ku], p.beta);
    const double ratio = r.envelope[ku] > 0.0 ? std::abs(r.epsilon[ku]) / r.envelope[ku]
                                              : (r.epsilon[ku] == 0.0 ? 0.0 : INFINITY);
    r.max_ratio = std::max(r.max_ratio, ratio);
  }
  r.ok = r.max_ratio <= 1.0 + 1e-12;
  return r;
}

GrowthReport growth_audit(const FlowSequence& s, const StepMaps& m, const FlowParams& p) {
  GrowthReport r;
  for (std::size_t k = 0; k < s.mu.size(); ++k) {
    r.mu_ratio.push_back(std::abs(s.mu[k]) / std::pow(s.lambda[k], 0.5 + p.beta));
    r.E_ratio.push_back(m.e_norm(s.E[k]) / std::pow(s.lambda[k], p.beta));
    r.max_ratio = std::max({r.max_ratio, r.mu_ratio.back(), r.E_ratio.back()});
  }
  r.boundary_exact = s.mu.back() == 0.0 && s.E.front().cwiseAbs().maxCoeff() == 0.0;
  r.ok = r.max_ratio <= 1.0 && r.boundary_exact;
  return r;
}

StepMaps surrogate_maps(const SurrogateParams& sp) {
  const int n = sp.n_E;
  StepMaps m;
  m.n_E = n;
  m.e_norm = [](const ECoeffs& E) { return E.size() ? E.cwiseAbs().maxCoeff() : 0.0; };
  m.L1 = [sp](int, double, const ECoeffs& E) { return sp.c1 * E.mean(); };
  m.L2 = [sp](int, double lam, const ECoeffs& E) { return sp.c2 * std::pow(lam, 0.5 + 6 * sp.eps) * E.mean(); };
  m.L3 = [sp, n](int, double, const ECoeffs& E) {
    ECoeffs out(n);
    for (int j = 0; j < n; ++j) out[j] = sp.theta * E[(j + 1) % n];
    return out;
  };
  m.mu_star = [sp](int, double lam, double mu, const ECoeffs& E) {
    return sp.c_mu * std::pow(lam, 0.75 - 4 * sp.eps) *
           (1.0 + 0.5 * std::tanh(mu / std::sqrt(lam)) + 0.5 * std::tanh(E.mean()));
  };
  m.E_star = [sp, n](int, double lam, double mu, const ECoeffs& E) {
    ECoeffs out(n);
    const double t = 0.5 * std::tanh(mu / std::sqrt(lam));
    for (int j = 0; j < n; ++j) {
      const double e0 = 1.0 / (1.0 + j);
      const double e1 = (j % 2 == 0) ? -1.0 : 1.0;
      out[j] = e0 + t * e1 + 0.5 * std::tanh(E[j]);
    }
    return ECoeffs(sp.c_E * std::pow(lam, 0.25 - 10 * sp.eps) * out);
  };
  m.eps_star = [sp](int, double lam, double mu, const ECoeffs& E) {
    return sp.c_eps * std::pow(lam, 0.25 - 10 * sp.eps) * (1.0 + 0.5 * std::tanh(mu / std::sqrt(lam)) +
                                                           0.5 * std::tanh(E.mean()));
  };
  return m;
}

StepMaps zero_maps(int n_E) {
  StepMaps m;
  m.n_E = n_E;
  m.e_norm = [](const ECoeffs& E) { return E.size() ? E.cwiseAbs().maxCoeff() : 0.0; };
  m.L1 = [](int, double, const ECoeffs&) { return 0.0; };
  m.L2 = m.L1;
  m.L3 = [n_E](int, double, const ECoeffs&) { return ECoeffs(Vector::Zero(n_E)); };
  m.mu_star = [](int, double, double, const ECoeffs&) { return 0.0; };
  m.E_star = [n_E](int, double, double, const ECoeffs&) { return ECoeffs(Vector::Zero(n_E)); };
  m.eps_star = m.mu_star;
  return m;
}

StepMaps linear_maps(double c, int n_E) {
  StepMaps m = zero_maps(n_E);
  m.mu_star = [c](int, double lam, double, const ECoeffs&) { return c * std::pow(lam, 0.75); };
  return m;
}

StepMaps scaled_mu_star(const StepMaps& m, double t) {
  StepMaps out = m;
  auto f = m.mu_star;
  out.mu_star = [f, t](int k, double lam, double mu, const ECoeffs& E) { return t * f(k, lam, mu, E); };
  return out;
}

std::vector<double> linear_closed_form(double c, const FlowParams& p) {
  // L^2 mu_k - mu_{k+1} = -c lambda_k^{3/4}, mu_K = 0, as one dense solve.
  const int n = p.K + 1;
  Matrix A = Matrix::Zero(n, n);
  Vector b = Vector::Zero(n);
  for (int k = 0; k < p.K; ++k) {
    A(k, k) = static_cast<double>(p.L) * p.L;
    A(k, k + 1) = -1.0;
    b[k] = -c * std::pow(p.lambda_k(k), 0.75);
  }
  A(p.K, p.K) = 1.0;
  Vector mu = A.partialPivLu().solve(b);
  return std::vector<double>(mu.data(), mu.data() + n);
}

namespace {

struct PipelineCache {
  int d, L;
  Index side;
  StepControls c;
  std::mutex m;
  std::map<std::tuple<double, double, double, double>, std::shared_ptr<const std::vector<double>>> cache;

  LocalFunctional build(const TorusLattice& lat, const ECoeffs& E) const {
    LocalFunctional F(lat, 0);
    for (Index q = 0; q < F.cube_torus().count(); ++q) {
      Polymer X = F.polymer({q});
      if (E[0] != 0.0) F.add_monomial(X, E[0], 4);
      if (E[1] != 0.0) F.add_monomial(X, E[1], 6);
    }
    return F;
  }

  // Constant-field fit F(c) - F(0) = V(a2 c^2 + a4 c^4 + a6 c^6); returns (a4, a6).
  static ECoeffs project(const LocalFunctional& F) {
    const TorusLattice& lat = F.lattice();
    const double V = lat.volume();
    const double f0 = F.total(Field(lat));
    Eigen::Matrix3d A;
    Eigen::Vector3d b;
    const double amps[3] = {0.25, 0.5, 1.0};
    for (int i = 0; i < 3; ++i) {
      Field phi(lat);
      for (Index x = 0; x < lat.size(); ++x) phi[x] = amps[i];
      const double c2 = amps[i] * amps[i];
      A.row(i) << c2, c2 * c2, c2 * c2 * c2;
      b[i] = (F.total(phi) - f0) / V;
    }
    Eigen::Vector3d a = A.fullPivLu().solve(b);
    ECoeffs out(2);
    out << a[1], a[2];
    return out;
  }

  std::shared_ptr<const std::vector<double>> pieces(double lam, double mu, const ECoeffs& E) {
    auto key = std::make_tuple(lam, mu, E[0], E[1]);
    {
      std::lock_guard<std::mutex> lk(m);
      auto it = cache.find(key);
      if (it != cache.end()) return it->second;
    }
    FlowState s = micro_state(d, L, side, 1, 0, lam, mu);
    s.E = build(s.lattice(), E);
    StepPieces p = step_pieces(s, c);
    ECoeffs l3 = project(p.L3E);
    ECoeffs es = project(p.E_star);
    auto v = std::make_shared<const std::vector<double>>(
        std::vector<double>{p.L1E, p.L2E, l3[0], l3[1], p.mu_star, es[0], es[1], p.epsilon_star});
    std::lock_guard<std::mutex> lk(m);
    cache[key] = v;
    return v;
  }
};

}  // namespace

StepMaps pipeline_maps(int d, int L, Index unit_side, const StepControls& c) {
  auto pc = std::make_shared<PipelineCache>();
  pc->d = d;
  pc->L = L;
  pc->side = unit_side;
  pc->c = c;
  StepMaps m;
  m.n_E = 2;
  m.e_norm = [](const ECoeffs& E) { return E.cwiseAbs().maxCoeff(); };
  // The scaling pieces do not depend on mu; mu = 0 keys share the cache.
  m.L1 = [pc](int, double lam, const ECoeffs& E) { return (*pc->pieces(lam, 0.0, E))[0]; };
  m.L2 = [pc](int, double lam, const ECoeffs& E) { return (*pc->pieces(lam, 0.0, E))[1]; };
  m.L3 = [pc](int, double lam, const ECoeffs& E) {
    auto v = pc->pieces(lam, 0.0, E);
    ECoeffs out(2);
    out << (*v)[2], (*v)[3];
    return out;
  };
  m.mu_star = [pc](int, double lam, double mu, const ECoeffs& E) { return (*pc->pieces(lam, mu, E))[4]; };
  m.E_star = [pc](int, double lam, double mu, const ECoeffs& E) {
    auto v = pc->pieces(lam, mu, E);
    ECoeffs out(2);
    out << (*v)[5], (*v)[6];
    return out;
  };
  m.eps_star = [pc](int, double lam, double mu, const ECoeffs& E) { return (*pc->pieces(lam, mu, E))[7]; };
  return m;
}

UniquenessProbe uniqueness_probe(const StepMaps& m, const FlowParams& p, unsigned seed) {
  FlowSequence start = FlowSequence::zero(p, m.n_E);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int k = 0; k <= p.K; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    start.mu[ku] = u(rng) * std::pow(start.lambda[ku], 0.5 + p.beta);
    for (int j = 0; j < m.n_E; ++j) start.E[ku][j] = u(rng) * std::pow(start.lambda[ku], p.beta);
  }
  FixedPoint a = solve_fixed_point(m, p);
  FixedPoint b = solve_fixed_point(m, p, 1e-15, 200, &start);
  UniquenessProbe r;
  r.distance = seq_distance(a.seq, b.seq, m, p.beta);
  r.iterations_a = a.report.iterations;
  r.iterations_b = b.report.iterations;
  return r;
}

MonotoneProbe monotone_probe(const StepMaps& m, const FlowParams& p, int points) {
  MonotoneProbe r;
  for (int i = 0; i < points; ++i) {
    const double t = points > 1 ? static_cast<double>(i) / (points - 1) : 1.0;
    FixedPoint fp = solve_fixed_point(scaled_mu_star(m, t), p);
    r.t.push_back(t);
    r.norm.push_back(fp.report.norm);
    if (i > 0 && r.norm[static_cast<std::size_t>(i)] < r.norm[static_cast<std::size_t>(i - 1)] * (1.0 - 1e-12))
      r.nondecreasing = false;
  }
  return r;
}

}  // namespace blockrg
