#include "blockrg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "blockrg/error.hpp"

namespace blockrg {

double Rule1D::total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

Rule1D gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw ConfigError("gauss_legendre: need at least one node");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  std::vector<std::pair<double, double>> nw(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double v0 = es.eigenvectors()(0, i);
    nw[static_cast<std::size_t>(i)] = {es.eigenvalues()(i), 2.0 * v0 * v0};
  }
  std::sort(nw.begin(), nw.end());
  // Enforce exact mirror symmetry of the rule.
  for (int i = 0; i < n / 2; ++i) {
    auto& a = nw[static_cast<std::size_t>(i)];
    auto& b = nw[static_cast<std::size_t>(n - 1 - i)];
    double x = 0.5 * (b.first - a.first), w = 0.5 * (a.second + b.second);
    a = {-x, w};
    b = {x, w};
  }
  if (n % 2 == 1) nw[static_cast<std::size_t>(n / 2)].first = 0.0;
  Rule1D r;
  double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  for (auto& [x, w] : nw) {
    r.nodes.push_back(mid + half * x);
    r.weights.push_back(half * w);
  }
  return r;
}

Rule1D truncated_gaussian_rule(int n, double p) {
  if (!(p > 0.0)) throw ConfigError("truncated_gaussian_rule: p must be positive");
  Rule1D r = gauss_legendre(n, -p, p);
  for (std::size_t i = 0; i < r.size(); ++i) r.weights[i] *= std::exp(-0.5 * r.nodes[i] * r.nodes[i]);
  double t = r.total_weight();
  for (double& w : r.weights) w /= t;
  return r;
}

double gaussian_tail_mass(double p) { return std::erfc(p / std::sqrt(2.0)); }

Rule1D two_atom_rule(double x) { return Rule1D{{-x, x}, {0.5, 0.5}}; }

Rule1D three_atom_rule(double x, double center_weight) {
  if (!(center_weight > 0.0 && center_weight < 1.0)) throw ConfigError("three_atom_rule: weight out of range");
  double side = 0.5 * (1.0 - center_weight);
  return Rule1D{{-x, 0.0, x}, {side, center_weight, side}};
}

}  // namespace blockrg
