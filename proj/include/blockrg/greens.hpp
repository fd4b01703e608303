#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "blockrg/averaging.hpp"
#include "blockrg/gaussian_flow.hpp"
#include "blockrg/lattice.hpp"

namespace blockrg {

// C^2 bump: 1 on |u| <= 1/3, 0 on |u| >= 2/3, h(u)^2 + h(u-1)^2 = 1 on [1/3, 2/3].
double bump_profile(double u);

// Cubes of side M = L^m (continuum) on a level-k lattice, indexed like the
// lattice of cube centers.
class CubeLayout {
 public:
  CubeLayout(const TorusLattice& fine, int m);

  const TorusLattice& fine() const { return blocks_.fine(); }
  const TorusLattice& centers() const { return blocks_.coarse(); }
  const BlockMap& blocks() const { return blocks_; }
  int m() const { return m_; }
  Index cube_sites_per_side() const { return blocks_.block_side(); }
  Index count() const { return blocks_.coarse().size(); }
  Index cube_of(Index site) const { return blocks_.block_of(site); }
  const std::vector<Index>& sites_of(Index cube) const { return blocks_.sites_of(cube); }

  // The 3^d cubes within sup-distance one (with self), deduplicated.
  std::vector<Index> neighbors(Index cube) const;
  Region region(const std::vector<Index>& cubes) const;
  // Enlarged cube: union of the cube and its neighbors.
  Region enlarged(Index cube) const { return region(neighbors(cube)); }

 private:
  BlockMap blocks_;
  int m_;
};

class PartitionOfUnity {
 public:
  PartitionOfUnity(const TorusLattice& fine, int m);

  const CubeLayout& layout() const { return layout_; }
  const Vector& h(Index cube) const { return h_[static_cast<std::size_t>(cube)]; }
  double max_sum_sq_error() const;
  // max |d h| * M and max |d d h| * M^2 over cubes, directions and sites.
  double c_first() const;
  double c_second() const;
  bool support_ok() const;

 private:
  CubeLayout layout_;
  std::vector<Vector> h_;
};

// Neumann-restricted inverse of (-Lap + V) on a region, embedded as a
// full-size matrix. V must be block diagonal on blocks inside the region.
Matrix neumann_green(const Region& region, const Matrix& V);
// Local operator -Lap_N + V restricted to the region.
Matrix neumann_operator_local(const Region& region, const Matrix& V);
// mu_bar_k + a_k Q_k^T Q_k on the fine lattice.
Matrix gk_potential(const GaussianLevel& g);
// Potential of the G_{k,r} operator in the Q_k, Q_{k+1} form.
Matrix gkr_potential(const GaussianLevel& g, double r);
// True when the region is neither the whole torus nor free of wrap-around in
// every direction.
bool region_wraps(const Region& region);

struct WalkDiagnostics {
  std::vector<double> order_norms;  // max-abs of the order-n term
  std::vector<double> ratios;       // order_norms[n] / order_norms[n-1]
  double max_ratio = 0.0;
  bool converging = true;
};

struct WalkResult {
  Matrix sum;
  WalkDiagnostics diag;
};

struct WalkResultC {
  CMatrix sum;
  WalkDiagnostics diag;
};

// Parametrix and random walk expansion for (-Lap + V)^{-1}.
class RandomWalk {
 public:
  RandomWalk(const PartitionOfUnity& pou, const Matrix& V);

  const PartitionOfUnity& pou() const { return pou_; }
  const Matrix& A() const { return A_; }
  const Matrix& parametrix() const { return Gstar_; }
  const Matrix& defect() const { return K_; }
  // max |A G* - (I - K)|.
  double parametrix_residual() const;
  double defect_norm() const;

  // Local operators of one walk step.
  const Matrix& start_term(Index z) const { return S_[static_cast<std::size_t>(z)]; }  // h G(box) h
  const Matrix& step_term(Index z) const { return T_[static_cast<std::size_t>(z)]; }   // K_z G(box) h
  const Matrix& commutator(Index z) const { return Kz_[static_cast<std::size_t>(z)]; }
  std::uint64_t enlarged_mask(Index z) const { return emask_[static_cast<std::size_t>(z)]; }

  // sum over |w| <= n_max with all s = 1.
  WalkResult expand(int n_max) const;
  // s in {0,1}: cubes in `on` have s = 1.
  WalkResult expand_corner(int n_max, std::uint64_t on) const;
  // General cube weights, by dynamic programming over (last cube, support).
  WalkResultC expand_weighted(int n_max, const std::vector<std::complex<double>>& s, std::size_t state_cap = 20000) const;

 private:
  WalkResult expand_with(int n_max, const Matrix& K) const;
  PartitionOfUnity pou_;
  Matrix A_;
  Matrix Gstar_;
  Matrix K_;
  std::vector<Matrix> S_, T_, Kz_;
  std::vector<std::uint64_t> emask_;
};

struct DecayFit {
  double gamma = 0.0;
  double C = 0.0;
  int points = 0;
};
// Least squares fit of log(value) = log C - gamma * dist over positive values
// with dist > 0.
DecayFit fit_exponential(const std::vector<double>& dist, const std::vector<double>& value);

struct DecaySample {
  double dist;
  double value;
};

// |G f| on unit cubes for f = indicator of a source unit cube.
std::vector<DecaySample> probe_decay(const Matrix& G, const BlockMap& unit_blocks, Index source_block,
                                     const Region* restrict_to = nullptr);
// Operator norms of unit-cube blocks of G against block separation.
std::vector<DecaySample> block_norm_decay(const Matrix& G, const BlockMap& unit_blocks, bool parallel = true);

struct HolderReport {
  double max_value = 0.0;
  DecayFit fit;
  std::vector<DecaySample> samples;
};
// Per-site max of |du(x) - du(x')| / d(x,x')^alpha over partners x' with
// 0 < d(x,x') <= 1 and directions.
Vector holder_site_profile(const Field& u, double alpha);
// The same for u = G f, maximized over sites.
double holder_seminorm(const Matrix& G, const Field& f, double alpha);
HolderReport holder_decay(const Matrix& G, const BlockMap& unit_blocks, Index source_block, double alpha);

struct DecaySeries {
  std::string name;
  std::vector<DecaySample> samples;
  DecayFit fit;
};
// Unit-block decay of G_k, G_{k,r} and the Neumann G_k on a region of
// `region_cubes` consecutive cubes of side L^m, on a level-k torus.
std::vector<DecaySeries> greens_decay_suite(int d, int L, int k, int m, Index unit_side, double a, double r,
                                            int region_cubes);

}  // namespace blockrg
