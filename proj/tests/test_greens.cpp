#include <cmath>

#include "doctest.h"

#include "blockrg/greens.hpp"
#include "blockrg/linalg.hpp"

using namespace blockrg;

namespace {

GaussianLevel level_one(Index fine_side) {
  GaussParams p;
  p.a = 1.0;
  p.k = 1;
  return GaussianLevel(TorusLattice(1, 3, -1, fine_side), p);
}

}  // namespace

TEST_CASE("bump profile") {
  CHECK(bump_profile(0.0) == 1.0);
  CHECK(bump_profile(0.3) == 1.0);
  CHECK(bump_profile(0.7) == 0.0);
  CHECK(bump_profile(-0.7) == 0.0);
  for (double u = 1.0 / 3.0; u <= 2.0 / 3.0; u += 0.01) {
    CHECK(bump_profile(u) == doctest::Approx(bump_profile(-u)));
    CHECK(bump_profile(u) * bump_profile(u) + bump_profile(u - 1.0) * bump_profile(u - 1.0) ==
          doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("partition of unity") {
  for (int d = 1; d <= 2; ++d) {
    TorusLattice fine(d, 3, -1, 27);
    PartitionOfUnity pou(fine, 1);
    CHECK(pou.max_sum_sq_error() < 1e-14);
    CHECK(pou.support_ok());
    CHECK(pou.c_first() > 0.0);
    CHECK(pou.layout().neighbors(0).size() == static_cast<std::size_t>(d == 1 ? 3 : 9));
  }
}

TEST_CASE("random walk expansion converges to G_k") {
  GaussianLevel g = level_one(81);
  PartitionOfUnity pou(g.fine(), 2);
  RandomWalk rw(pou, gk_potential(g));
  CHECK(rw.parametrix_residual() < 1e-10);
  WalkResult r = rw.expand(8);
  CHECK(r.diag.max_ratio <= 0.5);
  CHECK(r.diag.converging);
  CHECK(max_abs_diff(r.sum, g.G()) < 1e-6);
}

TEST_CASE("weighted expansions reduce to the plain and corner sums") {
  GaussianLevel g = level_one(12 * 9);
  PartitionOfUnity pou(g.fine(), 1);
  RandomWalk rw(pou, gk_potential(g));
  std::vector<std::complex<double>> s(12, 1.0);
  CHECK((rw.expand_weighted(3, s).sum.real() - rw.expand(3).sum).cwiseAbs().maxCoeff() < 1e-12);
  std::uint64_t on = 0;
  for (int c = 0; c < 12; ++c)
    if (c != 0 && c != 1 && c != 6 && c != 7) on |= std::uint64_t{1} << c;
  for (int c = 0; c < 12; ++c) s[static_cast<std::size_t>(c)] = (on >> c & 1) ? 1.0 : 0.0;
  CHECK((rw.expand_weighted(3, s).sum.real() - rw.expand_corner(3, on).sum).cwiseAbs().maxCoeff() < 1e-12);
  // Cubes 2..5 and 8..11 are separated by s = 0 cubes: the corner sum has no
  // entries between them.
  WalkResult c = rw.expand_corner(6, on);
  double off = 0.0;
  const CubeLayout& lay = pou.layout();
  for (Index x = 0; x < g.fine().size(); ++x)
    for (Index y = 0; y < g.fine().size(); ++y) {
      const Index cx = lay.cube_of(x), cy = lay.cube_of(y);
      if (cx >= 2 && cx <= 5 && cy >= 8 && cy <= 11) off = std::max(off, std::abs(c.sum(x, y)));
    }
  CHECK(off < 1e-12);
}

TEST_CASE("neumann green's function inverts the local operator") {
  GaussianLevel g = level_one(81);
  CubeLayout lay(g.fine(), 1);
  Region reg = lay.region({0, 1, 2});
  CHECK_FALSE(region_wraps(reg));
  const Matrix V = gk_potential(g);
  const Matrix Gn = neumann_green(reg, V);
  const Matrix A = neumann_operator_local(reg, V);
  Matrix Gl(reg.size(), reg.size());
  for (Index i = 0; i < reg.size(); ++i)
    for (Index j = 0; j < reg.size(); ++j) Gl(i, j) = Gn(reg.sites()[i], reg.sites()[j]);
  CHECK(max_abs_diff(A * Gl, Matrix::Identity(reg.size(), reg.size())) < 1e-10);
}

TEST_CASE("exponential fit recovers synthetic rates") {
  std::vector<double> d, v;
  for (int i = 0; i <= 6; ++i) {
    d.push_back(i);
    v.push_back(2.5 * std::exp(-0.8 * i));
  }
  DecayFit f = fit_exponential(d, v);
  CHECK(f.gamma == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(f.C == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(f.points == 6);
}

TEST_CASE("green's functions decay exponentially") {
  for (const DecaySeries& s : greens_decay_suite(1, 3, 1, 1, 27, 1.0, 0.5, 5)) {
    INFO(s.name);
    CHECK(s.fit.gamma > 0.5);
    CHECK(s.fit.points >= 3);
  }
}

TEST_CASE("block norm decay serial and parallel agree") {
  GaussianLevel g = level_one(27);
  const auto a = block_norm_decay(g.G(), g.Qk(), false);
  const auto b = block_norm_decay(g.G(), g.Qk(), true);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value == b[i].value);
}
