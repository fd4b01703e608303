#include <cmath>

#include "doctest.h"

#include "blockrg/kernels.hpp"
#include "blockrg/quadrature.hpp"

using namespace blockrg;

TEST_CASE("gauss-legendre integrates polynomials of degree 2n-1 exactly") {
  for (int n = 1; n <= 12; ++n) {
    Rule1D r = gauss_legendre(n, 0.0, 2.0);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
      CHECK(s == doctest::Approx(std::pow(2.0, p + 1) / (p + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("truncated gaussian rule") {
  CHECK(gaussian_tail_mass(0.0) == doctest::Approx(1.0));
  CHECK(gaussian_tail_mass(1.0) == doctest::Approx(0.31731050786291410).epsilon(1e-14));
  CHECK(gaussian_tail_mass(3.0) == doctest::Approx(0.0026997960632601866).epsilon(1e-13));
  Rule1D r = truncated_gaussian_rule(40, 8.0);
  CHECK(r.total_weight() == doctest::Approx(1.0).epsilon(1e-14));
  double m2 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    m2 += r.weights[i] * r.nodes[i] * r.nodes[i];
    m4 += r.weights[i] * std::pow(r.nodes[i], 4);
  }
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("atom rules") {
  Rule1D two = two_atom_rule(0.5);
  CHECK(two.size() == 2);
  CHECK(two.total_weight() == doctest::Approx(1.0));
  Rule1D three = three_atom_rule(1.0, 0.5);
  CHECK(three.total_weight() == doctest::Approx(1.0));
}

TEST_CASE("tensor sums agree between the serial and parallel kernels") {
  std::vector<Rule1D> rules(5, gauss_legendre(6, -1.0, 1.0));
  CHECK(kernels::grid_size(rules) == 7776);
  auto make = [] {
    return [](const double* x) {
      double s = 1.0;
      for (int i = 0; i < 5; ++i) s *= 1.0 + x[i] * x[i];
      return s;
    };
  };
  // Product of int_{-1}^{1} (1 + x^2) dx = 8/3.
  const double exact = std::pow(8.0 / 3.0, 5);
  const double serial = kernels::tensor_sum_serial(rules, make);
  const double parallel = kernels::tensor_sum_parallel(rules, make);
  CHECK(serial == doctest::Approx(exact).epsilon(1e-13));
  CHECK(std::abs(serial - parallel) < 1e-12 * exact);
}

TEST_CASE("block norm tables agree") {
  Matrix G = Matrix::Random(30, 30);
  std::vector<std::vector<Index>> rows{{0, 1, 2}, {3, 4}, {10, 20, 29}};
  std::vector<std::vector<Index>> cols{{5, 6}, {7}, {8, 9, 11, 12}};
  const Matrix a = kernels::block_norm_table_serial(G, rows, cols);
  const Matrix b = kernels::block_norm_table_parallel(G, rows, cols);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a(1, 1) == doctest::Approx(std::hypot(G(3, 7), G(4, 7))));
}
