#pragma once

#include <vector>

namespace blockrg {

// One-dimensional rule: nodes and positive weights.
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
  double total_weight() const;
};

// Gauss-Legendre on [lo, hi] (Golub-Welsch).
Rule1D gauss_legendre(int n, double lo = -1.0, double hi = 1.0);

// Unit Gaussian restricted to [-p, p]: Gauss-Legendre nodes with the density
// folded into the weights, renormalized to total mass 1.
Rule1D truncated_gaussian_rule(int n, double p);

// Mass of the unit Gaussian outside [-p, p], computed with erfc.
double gaussian_tail_mass(double p);

// Symmetric atom measure {+-x} with weight 1/2 each, or three atoms {-x, 0, x}.
Rule1D two_atom_rule(double x);
Rule1D three_atom_rule(double x, double center_weight);

}  // namespace blockrg
