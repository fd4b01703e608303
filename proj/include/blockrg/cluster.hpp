#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "blockrg/polymer.hpp"
#include "blockrg/quadrature.hpp"

namespace blockrg {

// Per-site probability measure given by atoms or quadrature nodes.
struct UltralocalMeasure {
  Rule1D rule;
  static UltralocalMeasure atoms(std::vector<double> points, std::vector<double> weights);
  // Unit Gaussian restricted to [-p, p], renormalized.
  static UltralocalMeasure truncated_gaussian(int nodes, double p);
  bool normalized(double tol = 1e-12) const;
};

using CellMask = std::uint32_t;

// H(X, W) for a polymer X given as a cell mask; W holds every site value but
// H may read only the sites of X.
struct ClusterPolymer {
  CellMask cells = 0;
  std::function<double(const double*)> H;
};

// Polymers over cells; each cell owns a set of integration sites.
struct ClusterInstance {
  std::vector<std::vector<int>> cell_sites;
  int n_sites = 0;
  UltralocalMeasure measure;
  std::vector<ClusterPolymer> polymers;

  int n_cells() const { return static_cast<int>(cell_sites.size()); }
  std::vector<int> sites_of(CellMask m) const;
  void validate() const;
};

struct Caps {
  int max_polymers = 20;
  std::int64_t max_grid = std::int64_t{1} << 26;
};

// K(Y, W) as a sum over indivisible families of (e^{H} - 1) products.
struct MayerAmplitude {
  CellMask Y = 0;
  std::vector<std::vector<int>> families;  // polymer indices
  double operator()(const ClusterInstance& inst, const double* W) const;
};
std::vector<MayerAmplitude> mayer_amplitudes(const ClusterInstance& inst, const Caps& caps = {});

// K#(Y) = int K(Y, W) prod dmu over the sites of Y.
std::map<CellMask, double> integrate_amplitudes(const ClusterInstance& inst, const std::vector<MayerAmplitude>& K,
                                                const Caps& caps = {}, bool parallel = true);

// Sum over connected graphs on the family of prod (zeta - 1), zeta = 1 iff
// disjoint. Subset recursion; n <= 16.
double connected_rho_T(const std::vector<CellMask>& family);
// Direct sum over all graphs; n <= 6.
double connected_rho_T_graphs(const std::vector<CellMask>& family);
// Kirchhoff count of spanning trees of the overlap graph.
double overlap_spanning_trees(const std::vector<CellMask>& family);
// Number of labelled trees on n vertices with the given degrees, by Pruefer
// enumeration and by (n-2)!/prod (d_j - 1)!.
std::int64_t trees_with_degrees_enumerated(const std::vector<int>& degrees);
double trees_with_degrees_formula(const std::vector<int>& degrees);

struct TailEstimate {
  double alternating = 0.0;
  double tree_graph = 0.0;
  double reported = 0.0;
  bool summable = true;
};

struct ClusterResult {
  std::map<CellMask, double> K_sharp;
  std::map<CellMask, double> H_sharp;
  int n_max = 0;
  double total = 0.0;  // sum_Y H#(Y)
  std::vector<double> order_totals;
  TailEstimate tail;
};

// H#(Y) through order n_max in the number of polymers, via the power series of
// log Z(S; z) on every cell subset S and Moebius inversion.
ClusterResult connected_amplitudes(const std::map<CellMask, double>& K_sharp, int n_cells, int n_max);
// Untruncated Moebius inversion of log Z(S) at z = 1.
std::map<CellMask, double> connected_amplitudes_exact(const std::map<CellMask, double>& K_sharp, int n_cells);
// H#(Y) as the explicit sum over ordered tuples with rho^T, through order n_max.
std::map<CellMask, double> connected_amplitudes_rho(const std::map<CellMask, double>& K_sharp, int n_max);

struct BruteForceResult {
  double log_xi = 0.0;
  std::map<CellMask, double> H_exact;  // by Moebius over cell subsets
};
// log of int exp(sum_X H(X, W)) dmu by direct tensor summation.
double brute_force_log_xi(const ClusterInstance& inst, CellMask restrict_to, const Caps& caps = {});
BruteForceResult brute_force_log_partition(const ClusterInstance& inst, const Caps& caps = {});

ClusterResult run_cluster_expansion(const ClusterInstance& inst, int n_max, const Caps& caps = {});

struct DecayReport {
  double H0 = 0.0;            // max_X sup_W |H(X, W)| e^{kappa d_M(X)}
  bool hypothesis_ok = true;  // H0 <= c0
  double fitted_rate = 0.0;
  double required_rate = 0.0;  // kappa - 3 kappa0 - 3
  std::vector<std::pair<double, double>> samples;  // (d_M, max |H#|)
};
// Cells are the cubes of `torus` with matching indices.
DecayReport decay_bound_report(const ClusterInstance& inst, const ClusterResult& res, const CubeTorus& torus,
                               double kappa, double kappa0, double c0);

}  // namespace blockrg
