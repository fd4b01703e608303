#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "blockrg/lattice.hpp"
#include "blockrg/linalg.hpp"

using namespace blockrg;

namespace {

Field random_field(const TorusLattice& lat, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Field f(lat);
  for (Index i = 0; i < lat.size(); ++i) f[i] = n(rng);
  return f;
}

}  // namespace

TEST_CASE("lattice geometry") {
  TorusLattice lat(3, 3, -2, 9);
  CHECK(lat.size() == 729);
  CHECK(lat.spacing() == doctest::Approx(1.0 / 9.0));
  CHECK(lat.site_weight() == doctest::Approx(1.0 / 729.0));
  CHECK(lat.volume() == doctest::Approx(1.0));
  for (Index i : {Index{0}, Index{17}, Index{728}}) CHECK(lat.index(lat.coords(i)) == i);
  CHECK(lat.neighbors(0).size() == 6);
  CHECK(lat.int_distance(lat.index({0, 0, 0}), lat.index({8, 4, 1})) == 4);
  TorusLattice c = lat.coarsened(1);
  CHECK(c.side() == 3);
  CHECK(c.spacing() == doctest::Approx(1.0 / 3.0));
  CHECK(TorusLattice::level(2, 3, 1, 2) == TorusLattice(2, 3, -2, 27));
  CHECK(field_dimension(3) == doctest::Approx(0.5));
}

TEST_CASE("laplacian on plane waves matches the lattice dispersion") {
  for (int d = 1; d <= 3; ++d) {
    TorusLattice lat(d, 3, -1, 9);
    const double h = lat.spacing();
    Field f(lat);
    for (Index i = 0; i < lat.size(); ++i) {
      const Coord x = lat.coords(i);
      double phase = 0.0;
      for (int mu = 0; mu < d; ++mu) phase += 2.0 * std::numbers::pi * (mu + 1) * x[mu] / 9.0;
      f[i] = std::cos(phase);
    }
    double ev = 0.0;
    for (int mu = 0; mu < d; ++mu) ev += (2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * (mu + 1) / 9.0)) / (h * h);
    const Field g = laplacian(f) + f * ev;
    CHECK(sup_norm(g) < 1e-11);
  }
}

TEST_CASE("derivative adjoint and laplacian factorization") {
  TorusLattice lat(2, 3, -1, 9);
  const Field f = random_field(lat, 1), g = random_field(lat, 2);
  Field sum(lat);
  for (int mu = 0; mu < 2; ++mu) {
    CHECK(inner_product(forward_derivative(f, mu), g) ==
          doctest::Approx(inner_product(f, derivative_adjoint(g, mu))).epsilon(1e-12));
    sum = sum + derivative_adjoint(forward_derivative(f, mu), mu);
  }
  CHECK(sup_norm(sum + laplacian(f)) < 1e-10);
  const Matrix D = laplacian_matrix(lat);
  CHECK(max_abs_diff(D, D.transpose()) == 0.0);
  CHECK((D * f.values() - laplacian(f).values()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(sup_norm(laplacian(Field::constant(lat, 3.0))) == 0.0);
}

TEST_CASE("neumann laplacian on a segment") {
  TorusLattice lat(1, 3, 0, 10);
  Region r(lat, {2, 3, 4, 5});
  const Matrix N = neumann_laplacian_local(r);
  // -Lap_N on a path of four sites: tridiagonal with 1, 2, 2, 1 on the diagonal.
  Matrix ref = Matrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) ref(i, i) = (i == 0 || i == 3) ? 1.0 : 2.0;
  for (int i = 0; i < 3; ++i) ref(i, i + 1) = ref(i + 1, i) = -1.0;
  CHECK((max_abs_diff(N, ref) < 1e-14 || max_abs_diff(N, -ref) < 1e-14));
  CHECK(std::abs(N.rowwise().sum().maxCoeff()) < 1e-14);
}

TEST_CASE("scaling round trip") {
  TorusLattice lat(3, 3, -1, 6);
  const Field f = random_field(lat, 3);
  const Field up = scale_field(f, ScaleDirection::up);
  CHECK(up.lattice() == lat.scaled_up());
  CHECK(up[5] == doctest::Approx(f[5] * std::pow(3.0, -0.5)));
  CHECK(sup_norm(scale_field(up, ScaleDirection::down) - f) < 1e-14);
}

TEST_CASE("dense linear algebra helpers") {
  Matrix A(3, 3);
  A << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  CHECK(is_spd(A));
  CHECK(max_abs_diff(spd_inverse(A) * A, Matrix::Identity(3, 3)) < 1e-14);
  CHECK(spd_logdet(A) == doctest::Approx(std::log(A.determinant())));
  const Matrix S = sym_sqrt(A);
  CHECK(max_abs_diff(S * S, A) < 1e-13);
  Matrix B(2, 2);
  B << 1, 2, 2, 1;
  CHECK_FALSE(is_spd(B));
  CHECK(min_eigenvalue(B) == doctest::Approx(-1.0));
  CHECK(operator_norm(B) == doctest::Approx(3.0));
  CHECK_THROWS(spd_inverse(B));
}
