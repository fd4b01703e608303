#pragma once

#include <optional>
#include <vector>

#include "blockrg/lattice.hpp"

namespace blockrg {

// Periodic grid of cubes, n per side, indexed with coordinate 0 fastest.
class CubeTorus {
 public:
  CubeTorus(int d, Index n);
  int d() const { return d_; }
  Index n() const { return n_; }
  Index count() const { return count_; }
  Coord coords(Index c) const;
  Index index(const Coord& x) const;
  std::vector<Index> face_neighbors(Index c) const;
  // Sup-metric distance between centers, in cube units.
  Index distance(Index a, Index b) const;
  bool operator==(const CubeTorus& o) const { return d_ == o.d_ && n_ == o.n_; }

 private:
  int d_;
  Index n_;
  Index count_;
};

bool is_connected(const CubeTorus& t, const std::vector<Index>& cubes);
// Length of the minimum spanning tree over cube centers, in cube units.
double tree_distance(const CubeTorus& t, const std::vector<Index>& cubes);

class Polymer {
 public:
  // Throws DomainError if empty or not face-connected.
  Polymer(const CubeTorus& t, std::vector<Index> cubes);
  const CubeTorus& torus() const { return t_; }
  const std::vector<Index>& cubes() const { return cubes_; }
  Index size() const { return static_cast<Index>(cubes_.size()); }
  double d_M() const { return dM_; }
  bool contains(Index c) const;
  bool intersects(const Polymer& o) const;
  bool subset_of(const Polymer& o) const;
  bool operator==(const Polymer& o) const { return t_ == o.t_ && cubes_ == o.cubes_; }
  bool operator<(const Polymer& o) const { return cubes_ < o.cubes_; }

 private:
  CubeTorus t_;
  std::vector<Index> cubes_;
  double dM_;
};

// All polymers containing `cube` with at most max_size cubes, sorted by
// (size, cube list).
std::vector<Polymer> enumerate_polymers(const CubeTorus& t, Index cube, int max_size, std::size_t cap = 2000000);
// Polymers meeting any cube of Y, deduplicated.
std::vector<Polymer> enumerate_polymers_meeting(const CubeTorus& t, const std::vector<Index>& Y, int max_size,
                                                std::size_t cap = 2000000);
// Upper bound (2^d)^{2(n-1)} on the number of polymers of size n containing a cube.
double path_count_bound(int d, int n);

struct CountRow {
  int size = 0;
  std::size_t count = 0;
  double sum_exp_a = 0.0;       // sum e^{-a|X|}
  double sum_exp_kappa = 0.0;   // sum e^{-kappa0 d_M(X)}
  double path_bound = 0.0;
};

struct CountingReport {
  int d = 0;
  double a = 0.0, kappa0 = 0.0;
  std::vector<CountRow> rows;
  double partial_a = 0.0, partial_kappa = 0.0;
  // Path-bound tails beyond the cap; infinite when the geometric ratio is >= 1.
  double tail_a = 0.0, tail_kappa = 0.0;
  double majorant_a = 0.0;  // sum_n path_bound(n) e^{-an} up to the cap
  double b = 0.0;           // max_n log(count_n) / n
  double K0 = 0.0;          // partial_kappa + tail_kappa
  bool counts_within_bound = true;
};
CountingReport counting_bounds_report(int d, int max_size, double a, double kappa0);

// Union of the LM-cubes meeting X, on the torus with n/L cubes per side.
Polymer reblock(const Polymer& X, int L);
bool is_small(const Polymer& X, int L);

struct SuperadditivityResult {
  bool ok = true;
  double lhs = 0.0, rhs = 0.0;
};
// d_M(Y) <= |Y - X|_M + d_M(X) for X inside Y.
SuperadditivityResult tree_superadditivity_check(const Polymer& X, const Polymer& Y);

struct GeometryViolations {
  std::size_t checked = 0;
  std::size_t ninety = 0;
  std::size_t salsa = 0;
  std::size_t clams = 0;
  std::size_t path_count = 0;
  std::size_t reblock_distance = 0;  // d_M(X) < L d_LM(Xbar); reported only
};
// Exhaustive geometry audit around cube 0 of a torus large enough to avoid wrap.
GeometryViolations polymer_geometry_audit(int d, int max_size, int clams_max_size, int L);

// Connected sub-polymers of X (all nonempty face-connected subsets).
std::vector<Polymer> sub_polymers(const Polymer& X);

}  // namespace blockrg
