#pragma once

#include <functional>
#include <string>
#include <vector>

#include "blockrg/lattice.hpp"
#include "blockrg/rg_step.hpp"

namespace blockrg {

// E_k is carried as a coefficient vector; its norm is supplied by the maps.
using ECoeffs = Vector;

// The pieces of one step as functions of (k, lambda_k, mu_k, E_k).
struct StepMaps {
  int n_E = 0;
  std::function<double(const ECoeffs&)> e_norm;
  std::function<double(int, double, const ECoeffs&)> L1;
  std::function<double(int, double, const ECoeffs&)> L2;
  std::function<ECoeffs(int, double, const ECoeffs&)> L3;
  std::function<double(int, double, double, const ECoeffs&)> mu_star;
  std::function<ECoeffs(int, double, double, const ECoeffs&)> E_star;
  std::function<double(int, double, double, const ECoeffs&)> eps_star;
};

struct FlowParams {
  int d = 3;
  int L = 3;
  int K = 20;
  int Delta = 8;  // lambda_K = L^{-(4-d)Delta} lambda
  double lambda = 1.0;
  double beta = 0.1;
  double eps = 0.01;

  int N() const { return K + Delta; }
  double lambda_k(int k) const;
};

struct FlowSequence {
  std::vector<double> mu;      // k = 0..K
  std::vector<ECoeffs> E;      // k = 0..K
  std::vector<double> lambda;  // k = 0..K

  static FlowSequence zero(const FlowParams& p, int n_E);
  int K() const { return static_cast<int>(mu.size()) - 1; }
};

// sup_k max(lambda_k^{-1/2-beta}|mu_k|, lambda_k^{-beta}||E_k||).
double seq_norm(const FlowSequence& s, const StepMaps& m, double beta);
double seq_distance(const FlowSequence& a, const FlowSequence& b, const StepMaps& m, double beta);

// mu'_k = L^{-2}(mu_{k+1} - L2 E_k - mu*_k), E'_k = L3 E_{k-1} + E*_{k-1},
// mu'_K = 0, E'_0 = 0.
FlowSequence apply_T(const FlowSequence& s, const StepMaps& m, const FlowParams& p, bool parallel = true);

struct ConvergenceReport {
  std::vector<double> diffs;   // ||xi^{(n+1)} - xi^{(n)}||
  std::vector<double> ratios;  // diffs[n] / diffs[n-1] above the noise floor
  double max_ratio = 0.0;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;          // fixed-point equations, absolute, max over k
  double forward_residual = 0.0;  // mu_{k+1} = L^2 mu_k + L2 E_k + mu*_k
  double norm = 0.0;
  bool in_B1 = false;
};

struct FixedPoint {
  FlowSequence seq;
  ConvergenceReport report;
};

// Picard iteration from `start` (zero sequence by default). Throws
// NumericalError after three consecutive ratios >= 1.
FixedPoint solve_fixed_point(const StepMaps& m, const FlowParams& p, double tol = 1e-15, int max_iter = 200,
                             const FlowSequence* start = nullptr);

// Residual of the fixed-point equations at s.
double fixed_point_residual(const FlowSequence& s, const StepMaps& m, const FlowParams& p);
double forward_residual(const FlowSequence& s, const StepMaps& m, const FlowParams& p);

struct VacuumReport {
  std::vector<double> epsilon;   // k = 0..K, epsilon_K = 0
  std::vector<double> envelope;  // b S_n lambda_{K-n}^beta at k = K - n
  double b = 0.0;
  double max_ratio = 0.0;  // |epsilon_k| / envelope_k
  bool ok = true;
};
// epsilon_k = L^{-d}(epsilon_{k+1} - L1 E_k - eps*_k).
VacuumReport vacuum_energy_backfill(const FlowSequence& s, const StepMaps& m, const FlowParams& p);

struct GrowthReport {
  std::vector<double> mu_ratio;  // |mu_k| / lambda_k^{1/2+beta}
  std::vector<double> E_ratio;   // ||E_k|| / lambda_k^beta
  double max_ratio = 0.0;
  bool boundary_exact = true;
  bool ok = true;
};
GrowthReport growth_audit(const FlowSequence& s, const StepMaps& m, const FlowParams& p);

struct SurrogateParams {
  int n_E = 4;
  double c_mu = 0.2;
  double c_E = 0.2;
  double c_eps = 0.2;
  double c1 = 0.1;
  double c2 = 0.1;
  double theta = 0.3;  // L3 contraction
  double eps = 0.01;
};
// Smooth maps with the power structure of one step in lambda.
StepMaps surrogate_maps(const SurrogateParams& sp);
// mu* = c lambda^{3/4}, all other pieces zero.
StepMaps linear_maps(double c, int n_E = 1);
StepMaps zero_maps(int n_E = 1);
// mu*_k scaled by t.
StepMaps scaled_mu_star(const StepMaps& m, double t);

// Fixed point of linear_maps by a direct linear solve.
std::vector<double> linear_closed_form(double c, const FlowParams& p);

// Pipeline maps: every piece computed by step_pieces on a micro-instance, with
// E carried as single-cube phi^4 and phi^6 coefficients.
StepMaps pipeline_maps(int d, int L, Index unit_side, const StepControls& c);

struct UniquenessProbe {
  double distance = 0.0;
  int iterations_a = 0, iterations_b = 0;
};
UniquenessProbe uniqueness_probe(const StepMaps& m, const FlowParams& p, unsigned seed = 1);

struct MonotoneProbe {
  std::vector<double> t;
  std::vector<double> norm;
  bool nondecreasing = true;
};
MonotoneProbe monotone_probe(const StepMaps& m, const FlowParams& p, int points = 6);

}  // namespace blockrg
