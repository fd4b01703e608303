#pragma once

#include <algorithm>
#include <vector>

#include "blockrg/lattice.hpp"

namespace blockrg {

// Averaging over centered cubes of L^j x ... x L^j fine sites.
class BlockMap {
 public:
  BlockMap(const TorusLattice& fine, int j);

  const TorusLattice& fine() const { return fine_; }
  const TorusLattice& coarse() const { return coarse_; }
  int levels() const { return j_; }
  Index block_side() const { return b_; }
  Index block_size() const { return bsize_; }

  Index block_of(Index fine_site) const { return block_of_[static_cast<std::size_t>(fine_site)]; }
  const std::vector<Index>& sites_of(Index coarse_site) const { return sites_of_[static_cast<std::size_t>(coarse_site)]; }

  Field apply_q(const Field& f) const;
  Field apply_qt(const Field& g) const;
  ComplexField apply_q(const ComplexField& f) const;

  // Q as a coarse x fine matrix, Q^T (the adjoint operator) as fine x coarse.
  Matrix q_matrix() const;
  Matrix qt_matrix() const;
  Matrix projection_matrix() const;  // Q^T Q on the fine lattice

 private:
  TorusLattice fine_;
  TorusLattice coarse_;
  int j_;
  Index b_;
  Index bsize_;
  std::vector<Index> block_of_;
  std::vector<std::vector<Index>> sites_of_;
};

// Chain map1 (fine -> mid) then map2 (mid -> coarse).
BlockMap compose(const BlockMap& map1, const BlockMap& map2);

// Max deviation |Q(f_L) - (Qf)_L|.
double scale_commutation_error(const BlockMap& map, const Field& f);

struct AveragingReport {
  double composition = 0.0;  // Q_{j1+j2} f vs Q_{j2} Q_{j1} f
  double qqt = 0.0;          // Q Q^T g vs g
  double projection = 0.0;   // (Q^T Q)^2 vs Q^T Q
  double constants = 0.0;    // Q 1 vs 1
  double adjoint = 0.0;      // <Qf, g>_coarse vs <f, Q^T g>_fine / L^{jd} weights
  double scaling = 0.0;      // Q(f_L) vs (Qf)_L
  double max() const;
};
// Random-field replay of the averaging algebra on a torus with spacing L^{-k}.
AveragingReport averaging_identity_check(int d, int L, int k, int j1, int j2, Index coarse_side, int samples,
                                         unsigned seed);

}  // namespace blockrg
