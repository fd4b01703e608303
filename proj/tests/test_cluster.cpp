#include <cmath>
#include <random>

#include "doctest.h"

#include "blockrg/cluster.hpp"

using namespace blockrg;

namespace {

// Random polymer system on six cells with small quadratic activities.
ClusterInstance random_instance(unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  ClusterInstance inst;
  inst.cell_sites = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8}, {9}};
  inst.n_sites = 10;
  inst.measure = seed % 2 ? UltralocalMeasure::atoms({-1, 0, 1}, {0.25, 0.5, 0.25})
                          : UltralocalMeasure::truncated_gaussian(3, 3.0);
  const std::vector<CellMask> masks = {1, 2, 3, 6, 12, 24, 48, 5, 1 | 4 | 16, 32};
  for (CellMask m : masks) {
    if (U(rng) < -0.6) continue;
    const double a = 0.03 * U(rng), b = 0.03 * U(rng);
    const std::vector<int> sites = inst.sites_of(m);
    inst.polymers.push_back({m, [a, b, sites](const double* W) {
                               double s = 0.0;
                               for (int i : sites) s += W[i] * W[i];
                               return a + b * s;
                             }});
  }
  return inst;
}

}  // namespace

TEST_CASE("measures") {
  CHECK(UltralocalMeasure::truncated_gaussian(6, 4.0).normalized());
  CHECK(UltralocalMeasure::atoms({-1, 1}, {0.5, 0.5}).normalized());
  CHECK_FALSE(UltralocalMeasure::atoms({-1, 1}, {0.5, 0.6}).normalized());
}

TEST_CASE("truncated functions of overlap families") {
  CHECK(connected_rho_T({1, 1}) == doctest::Approx(-1.0));
  CHECK(connected_rho_T({1, 2}) == 0.0);
  CHECK(connected_rho_T({3, 6, 5}) == doctest::Approx(2.0));
  // Three copies of one polymer: complete graph, sum over connected graphs of (-1)^edges.
  CHECK(connected_rho_T({1, 1, 1}) == doctest::Approx(2.0));
  // Complete graph on four vertices: -6.
  CHECK(connected_rho_T({1, 1, 1, 1}) == doctest::Approx(-6.0));
  const std::vector<CellMask> fam = {3, 6, 12, 1, 9};
  CHECK(connected_rho_T(fam) == doctest::Approx(connected_rho_T_graphs(fam)));
  CHECK(std::abs(connected_rho_T(fam)) <= overlap_spanning_trees(fam));
  CHECK(overlap_spanning_trees({1, 1, 1}) == doctest::Approx(3.0));
}

TEST_CASE("labelled trees with prescribed degrees") {
  CHECK(trees_with_degrees_enumerated({3, 1, 1, 2, 1}) == 3);
  CHECK(trees_with_degrees_formula({3, 1, 1, 2, 1}) == doctest::Approx(3.0));
  CHECK(trees_with_degrees_enumerated({1, 1}) == 1);
  // Stars on six vertices.
  CHECK(trees_with_degrees_enumerated({5, 1, 1, 1, 1, 1}) == 1);
  CHECK(trees_with_degrees_enumerated({2, 2, 2, 1, 1}) == 6);
  CHECK(trees_with_degrees_formula({2, 2, 2, 1, 1}) == doctest::Approx(6.0));
}

TEST_CASE("two-cell amplitudes in closed form") {
  const double k1 = 0.1, k2 = -0.05, k12 = 0.02;
  std::map<CellMask, double> K{{1, k1}, {2, k2}, {3, k12}};
  auto H = connected_amplitudes_exact(K, 2);
  CHECK(H[1] == doctest::Approx(std::log1p(k1)).epsilon(1e-15));
  CHECK(H[2] == doctest::Approx(std::log1p(k2)).epsilon(1e-15));
  CHECK(H[3] == doctest::Approx(std::log(1 + k1 + k2 + k12 + k1 * k2) - std::log1p(k1) - std::log1p(k2)).epsilon(1e-14));
  ClusterResult series = connected_amplitudes(K, 2, 30);
  CHECK(series.H_sharp[3] == doctest::Approx(H[3]).epsilon(1e-13));
  auto rho = connected_amplitudes_rho(K, 4);
  ClusterResult four = connected_amplitudes(K, 2, 4);
  for (const auto& [Y, h] : four.H_sharp) CHECK(rho[Y] == doctest::Approx(h).epsilon(1e-13));
}

TEST_CASE("single polymer gives log1p") {
  ClusterInstance one;
  one.cell_sites = {{0}};
  one.n_sites = 1;
  one.measure = UltralocalMeasure::atoms({-1, 0, 1}, {0.25, 0.5, 0.25});
  one.polymers.push_back({1, [](const double* W) { return 0.1 * W[0] * W[0]; }});
  ClusterResult r = run_cluster_expansion(one, 30);
  // K# = 1/2 (e^{0.1} - 1).
  CHECK(r.K_sharp[1] == doctest::Approx(0.5 * std::expm1(0.1)).epsilon(1e-15));
  CHECK(std::abs(r.total - std::log1p(r.K_sharp[1])) < 1e-15);
}

TEST_CASE("cluster expansion matches brute force on random instances") {
  for (unsigned seed = 1; seed <= 8; ++seed) {
    INFO("seed " << seed);
    const ClusterInstance inst = random_instance(seed);
    const ClusterResult res = run_cluster_expansion(inst, 12);
    const BruteForceResult bf = brute_force_log_partition(inst);
    CHECK(std::abs(res.total - bf.log_xi) < 1e-10);
    CHECK(res.tail.summable);
    for (const auto& [Y, h] : bf.H_exact) {
      auto it = res.H_sharp.find(Y);
      CHECK(std::abs((it == res.H_sharp.end() ? 0.0 : it->second) - h) < 1e-10);
    }
    const auto K = mayer_amplitudes(inst);
    const auto serial = integrate_amplitudes(inst, K, {}, false);
    const auto parallel = integrate_amplitudes(inst, K, {}, true);
    for (const auto& [Y, v] : serial) CHECK(std::abs(parallel.at(Y) - v) < 1e-15);
  }
}

TEST_CASE("caps are enforced") {
  ClusterInstance inst = random_instance(3);
  Caps caps;
  caps.max_grid = 10;
  CHECK_THROWS(brute_force_log_partition(inst, caps));
}
