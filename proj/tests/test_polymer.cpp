#include <map>

#include "doctest.h"

#include "blockrg/error.hpp"
#include "blockrg/polymer.hpp"

using namespace blockrg;

namespace {

std::map<int, std::size_t> counts(int d, int max_size) {
  CubeTorus t(d, 2 * max_size + 3);
  std::map<int, std::size_t> c;
  for (const Polymer& p : enumerate_polymers(t, 0, max_size)) ++c[static_cast<int>(p.size())];
  return c;
}

}  // namespace

TEST_CASE("polymer counts containing a fixed cube") {
  // n times the number of fixed polyominoes (polycubes) of size n.
  auto c1 = counts(1, 6);
  for (int n = 1; n <= 6; ++n) CHECK(c1[n] == static_cast<std::size_t>(n));
  auto c2 = counts(2, 6);
  const std::size_t fixed2[] = {1, 2, 6, 19, 63, 216};
  for (int n = 1; n <= 6; ++n) CHECK(c2[n] == n * fixed2[n - 1]);
  auto c3 = counts(3, 4);
  const std::size_t fixed3[] = {1, 3, 15, 86};
  for (int n = 1; n <= 4; ++n) CHECK(c3[n] == n * fixed3[n - 1]);
  for (int n = 1; n <= 6; ++n) CHECK(static_cast<double>(c2[n]) <= path_count_bound(2, n));
}

TEST_CASE("connectivity and tree distance") {
  CubeTorus t(2, 8);
  const Index a = t.index({0, 0, 0}), b = t.index({1, 0, 0}), c = t.index({1, 1, 0}), far = t.index({4, 4, 0});
  CHECK(is_connected(t, {a, b, c}));
  CHECK_FALSE(is_connected(t, {a, c}));
  CHECK_THROWS_AS(Polymer(t, {a, far}), DomainError);
  CHECK(Polymer(t, {a}).d_M() == 0.0);
  CHECK(Polymer(t, {a, b, c}).d_M() == doctest::Approx(2.0));
  CHECK(tree_distance(t, {a, b, c}) == doctest::Approx(2.0));
  CHECK_THROWS(tree_distance(t, {a, c}));
  CHECK(t.distance(a, far) == 4);
  CHECK(t.distance(a, t.index({7, 7, 0})) == 1);
}

TEST_CASE("set relations") {
  CubeTorus t(1, 10);
  Polymer X(t, {2, 3}), Y(t, {1, 2, 3, 4}), Z(t, {6});
  CHECK(X.subset_of(Y));
  CHECK(X.intersects(Y));
  CHECK_FALSE(X.intersects(Z));
  CHECK(sub_polymers(Polymer(t, {1, 2, 3})).size() == 6);
  SuperadditivityResult s = tree_superadditivity_check(X, Y);
  CHECK(s.ok);
  CHECK(s.lhs <= s.rhs);
}

TEST_CASE("reblocking") {
  CubeTorus t(1, 9);
  // Centered blocks of three cubes: {8, 0, 1}, {2, 3, 4}, {5, 6, 7}.
  Polymer Xb = reblock(Polymer(t, {2, 3}), 3);
  CHECK(Xb.torus().n() == 3);
  CHECK(Xb.cubes() == std::vector<Index>{1});
  CHECK(reblock(Polymer(t, {1, 2}), 3).cubes() == std::vector<Index>{0, 1});
  CHECK(reblock(Polymer(t, {3, 4, 5}), 3).cubes() == std::vector<Index>{1, 2});
  CHECK(is_small(Polymer(t, {0, 1}), 3));
}

TEST_CASE("geometry audit has no violations") {
  GeometryViolations v = polymer_geometry_audit(2, 5, 4, 3);
  CHECK(v.checked > 0);
  CHECK(v.ninety == 0);
  CHECK(v.salsa == 0);
  CHECK(v.clams == 0);
  CHECK(v.path_count == 0);
}

TEST_CASE("counting report") {
  CountingReport r = counting_bounds_report(2, 5, 4.0, 3.0);
  REQUIRE(r.rows.size() == 5);
  CHECK(r.rows[1].count == 4);
  CHECK(r.rows[1].sum_exp_a == doctest::Approx(4.0 * std::exp(-8.0)));
  CHECK(r.counts_within_bound);
  CHECK(r.partial_a <= r.majorant_a);
  CHECK(r.K0 >= r.partial_kappa);
}
