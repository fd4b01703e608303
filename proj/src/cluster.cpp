#include "blockrg/cluster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "blockrg/error.hpp"
#include "blockrg/greens.hpp"
#include "blockrg/kernels.hpp"

namespace blockrg {

UltralocalMeasure UltralocalMeasure::atoms(std::vector<double> points, std::vector<double> weights) {
  if (points.size() != weights.size() || points.empty()) throw ConfigError("atom lists differ in length");
  for (double w : weights)
    if (!(w > 0.0)) throw ConfigError("atom weights must be positive");
  return {Rule1D{std::move(points), std::move(weights)}};
}

UltralocalMeasure UltralocalMeasure::truncated_gaussian(int nodes, double p) {
  return {truncated_gaussian_rule(nodes, p)};
}

bool UltralocalMeasure::normalized(double tol) const { return std::abs(rule.total_weight() - 1.0) <= tol; }

std::vector<int> ClusterInstance::sites_of(CellMask m) const {
  std::vector<int> out;
  for (int c = 0; c < n_cells(); ++c)
    if (m >> c & 1u) out.insert(out.end(), cell_sites[static_cast<std::size_t>(c)].begin(),
                                cell_sites[static_cast<std::size_t>(c)].end());
  std::sort(out.begin(), out.end());
  return out;
}

void ClusterInstance::validate() const {
  if (n_cells() < 1) throw ConfigError("cluster instance has no cells");
  if (n_cells() > 16) throw CapExceeded("cluster instances are limited to 16 cells");
  std::vector<int> owner(static_cast<std::size_t>(n_sites), -1);
  for (int c = 0; c < n_cells(); ++c)
    for (int s : cell_sites[static_cast<std::size_t>(c)]) {
      if (s < 0 || s >= n_sites) throw ConfigError("cell site out of range");
      if (owner[static_cast<std::size_t>(s)] != -1) throw ConfigError("site owned by two cells");
      owner[static_cast<std::size_t>(s)] = c;
    }
  if (!measure.normalized(1e-10)) throw ConfigError("measure is not normalized");
  const CellMask all = (CellMask{1} << n_cells()) - 1;
  for (const auto& p : polymers)
    if (p.cells == 0 || (p.cells & ~all) != 0) throw ConfigError("polymer cell mask out of range");
}

namespace {

bool family_connected(const std::vector<CellMask>& masks) {
  const std::size_t n = masks.size();
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < n; ++j)
      if (!seen[j] && (masks[i] & masks[j])) {
        seen[j] = 1;
        ++count;
        stack.push_back(j);
      }
  }
  return count == n;
}

template <class F>
double integrate_over(const ClusterInstance& inst, const std::vector<int>& sites, const Caps& caps, bool parallel,
                      F eval) {
  std::vector<Rule1D> rules(sites.size(), inst.measure.rule);
  if (kernels::grid_size(rules) > caps.max_grid) throw CapExceeded("exact integration grid exceeds cap");
  auto make = [&]() {
    return [&inst, &sites, &eval, W = std::vector<double>(static_cast<std::size_t>(inst.n_sites), 0.0)](
               const double* p) mutable {
      for (std::size_t i = 0; i < sites.size(); ++i) W[static_cast<std::size_t>(sites[i])] = p[i];
      return eval(W.data());
    };
  };
  if (sites.empty()) {
    std::vector<double> W(static_cast<std::size_t>(inst.n_sites), 0.0);
    return eval(W.data());
  }
  return parallel ? kernels::tensor_sum(rules, make) : kernels::tensor_sum_serial(rules, make);
}

using Series = std::vector<double>;

Series series_log(const Series& a) {
  const std::size_t N = a.size();
  Series b(N, 0.0);
  for (std::size_t n = 1; n < N; ++n) {
    double s = a[n] * static_cast<double>(n);
    for (std::size_t k = 1; k < n; ++k) s -= static_cast<double>(k) * b[k] * a[n - k];
    b[n] = s / static_cast<double>(n);
  }
  return b;
}

// In-place inverse of the subset-sum transform.
void moebius(std::vector<double>& f, int n) {
  for (int bit = 0; bit < n; ++bit)
    for (std::size_t S = 0; S < f.size(); ++S)
      if (S >> bit & 1u) f[S] -= f[S ^ (std::size_t{1} << bit)];
}

std::vector<std::pair<CellMask, double>> support(const std::map<CellMask, double>& K) {
  std::vector<std::pair<CellMask, double>> s;
  for (const auto& kv : K)
    if (kv.second != 0.0) s.push_back(kv);
  return s;
}

double mst_length(const CubeTorus& t, CellMask m) {
  std::vector<Index> c;
  for (int i = 0; i < 32; ++i)
    if (m >> i & 1u) c.push_back(i);
  const std::size_t n = c.size();
  if (n <= 1) return 0.0;
  std::vector<char> done(n, 0);
  std::vector<Index> best(n, std::numeric_limits<Index>::max());
  best[0] = 0;
  Index total = 0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!done[i] && (pick == n || best[i] < best[pick])) pick = i;
    done[pick] = 1;
    total += best[pick];
    for (std::size_t i = 0; i < n; ++i)
      if (!done[i]) best[i] = std::min(best[i], t.distance(c[pick], c[i]));
  }
  return static_cast<double>(total);
}

}  // namespace

double MayerAmplitude::operator()(const ClusterInstance& inst, const double* W) const {
  std::vector<double> f(inst.polymers.size(), std::numeric_limits<double>::quiet_NaN());
  double s = 0.0;
  for (const auto& fam : families) {
    double p = 1.0;
    for (int i : fam) {
      double& v = f[static_cast<std::size_t>(i)];
      if (std::isnan(v)) v = std::expm1(inst.polymers[static_cast<std::size_t>(i)].H(W));
      p *= v;
    }
    s += p;
  }
  return s;
}

std::vector<MayerAmplitude> mayer_amplitudes(const ClusterInstance& inst, const Caps& caps) {
  inst.validate();
  const int P = static_cast<int>(inst.polymers.size());
  if (P > caps.max_polymers) throw CapExceeded("too many polymers for family enumeration");
  std::map<CellMask, MayerAmplitude> by_union;
  for (std::uint64_t sub = 1; sub < (std::uint64_t{1} << P); ++sub) {
    std::vector<int> fam;
    std::vector<CellMask> masks;
    CellMask u = 0;
    for (int i = 0; i < P; ++i)
      if (sub >> i & 1u) {
        fam.push_back(i);
        masks.push_back(inst.polymers[static_cast<std::size_t>(i)].cells);
        u |= masks.back();
      }
    if (!family_connected(masks)) continue;
    auto& amp = by_union[u];
    amp.Y = u;
    amp.families.push_back(std::move(fam));
  }
  std::vector<MayerAmplitude> out;
  for (auto& kv : by_union) out.push_back(std::move(kv.second));
  return out;
}

std::map<CellMask, double> integrate_amplitudes(const ClusterInstance& inst, const std::vector<MayerAmplitude>& K,
                                                const Caps& caps, bool parallel) {
  std::map<CellMask, double> out;
  for (const auto& amp : K) {
    auto sites = inst.sites_of(amp.Y);
    out[amp.Y] = integrate_over(inst, sites, caps, parallel, [&](const double* W) { return amp(inst, W); });
  }
  return out;
}

double connected_rho_T(const std::vector<CellMask>& family) {
  const int n = static_cast<int>(family.size());
  if (n < 1) throw ConfigError("rho^T needs at least one polymer");
  if (n > 16) throw CapExceeded("rho^T is limited to 16 polymers");
  const std::size_t N = std::size_t{1} << n;
  std::vector<char> F(N, 0);
  std::vector<CellMask> uni(N, 0);
  F[0] = 1;
  for (std::size_t S = 1; S < N; ++S) {
    int low = std::countr_zero(S);
    std::size_t rest = S & (S - 1);
    CellMask m = family[static_cast<std::size_t>(low)];
    uni[S] = uni[rest] | m;
    F[S] = F[rest] && (uni[rest] & m) == 0;
  }
  std::vector<double> C(N, 0.0);
  for (std::size_t S = 1; S < N; S += 2) {
    double c = F[S];
    // proper subsets T of S containing element 0
    std::size_t rest = S ^ 1u;
    for (std::size_t sub = (rest - 1) & rest;; sub = (sub - 1) & rest) {
      std::size_t T = sub | 1u;
      if (F[S ^ T]) c -= C[T];
      if (sub == 0) break;
    }
    if (rest == 0) c = F[S];
    C[S] = c;
  }
  return C[N - 1];
}

double connected_rho_T_graphs(const std::vector<CellMask>& family) {
  const int n = static_cast<int>(family.size());
  if (n > 6) throw CapExceeded("graph enumeration is limited to 6 polymers");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  double total = 0.0;
  for (std::uint32_t g = 0; g < (1u << edges.size()); ++g) {
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
      return x;
    };
    double w = 1.0;
    int comps = n;
    for (std::size_t e = 0; e < edges.size() && w != 0.0; ++e) {
      if (!(g >> e & 1u)) continue;
      auto [a, b] = edges[e];
      bool disjoint = (family[static_cast<std::size_t>(a)] & family[static_cast<std::size_t>(b)]) == 0;
      w *= disjoint ? 0.0 : -1.0;
      int ra = find(a), rb = find(b);
      if (ra != rb) {
        parent[static_cast<std::size_t>(ra)] = rb;
        --comps;
      }
    }
    if (comps == 1) total += w;
  }
  return total;
}

double overlap_spanning_trees(const std::vector<CellMask>& family) {
  const auto n = static_cast<Index>(family.size());
  if (n <= 1) return 1.0;
  Matrix Lap = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j && (family[static_cast<std::size_t>(i)] & family[static_cast<std::size_t>(j)])) {
        Lap(i, j) = -1.0;
        Lap(i, i) += 1.0;
      }
  return std::round(Lap.bottomRightCorner(n - 1, n - 1).determinant());
}

std::int64_t trees_with_degrees_enumerated(const std::vector<int>& degrees) {
  const int n = static_cast<int>(degrees.size());
  if (n < 2) return n == 1 && degrees[0] == 0 ? 1 : 0;
  if (n == 2) return degrees[0] == 1 && degrees[1] == 1 ? 1 : 0;
  if (n > 8) throw CapExceeded("Pruefer enumeration is limited to 8 vertices");
  std::int64_t total = 0;
  const std::int64_t seqs = ipow(n, n - 2);
  std::vector<int> count(static_cast<std::size_t>(n));
  for (std::int64_t code = 0; code < seqs; ++code) {
    std::fill(count.begin(), count.end(), 1);
    std::int64_t c = code;
    for (int i = 0; i < n - 2; ++i) {
      ++count[static_cast<std::size_t>(c % n)];
      c /= n;
    }
    if (std::equal(count.begin(), count.end(), degrees.begin())) ++total;
  }
  return total;
}

double trees_with_degrees_formula(const std::vector<int>& degrees) {
  const int n = static_cast<int>(degrees.size());
  if (n < 2) return n == 1 && degrees[0] == 0 ? 1.0 : 0.0;
  int sum = 0;
  double denom = 1.0;
  for (int dj : degrees) {
    if (dj < 1) return 0.0;
    sum += dj;
    denom *= std::tgamma(dj);
  }
  if (sum != 2 * (n - 1)) return 0.0;
  return std::tgamma(n - 1.0) / denom;
}

ClusterResult connected_amplitudes(const std::map<CellMask, double>& K_sharp, int n_cells, int n_max) {
  if (n_max < 1) throw ConfigError("n_max must be at least 1");
  if (n_cells > 16) throw CapExceeded("cluster instances are limited to 16 cells");
  const std::size_t N = std::size_t{1} << n_cells;
  const auto sup = support(K_sharp);
  const auto terms = static_cast<std::size_t>(n_max) + 1;
  std::vector<Series> Z(N, Series(terms, 0.0));
  Z[0][0] = 1.0;
  for (std::size_t S = 1; S < N; ++S) {
    const CellMask low = CellMask{1} << std::countr_zero(S);
    Z[S] = Z[S ^ low];
    for (const auto& [Y, k] : sup) {
      if (!(Y & low) || (Y & ~static_cast<CellMask>(S))) continue;
      const Series& z = Z[S ^ Y];
      for (std::size_t n = 1; n < terms; ++n) Z[S][n] += k * z[n - 1];
    }
  }
  ClusterResult res;
  res.K_sharp = K_sharp;
  res.n_max = n_max;
  res.order_totals.assign(terms, 0.0);
  std::vector<Series> logZ(N);
  for (std::size_t S = 0; S < N; ++S) logZ[S] = series_log(Z[S]);
  std::vector<double> H(N, 0.0);
  for (std::size_t n = 1; n < terms; ++n) {
    std::vector<double> f(N);
    for (std::size_t S = 0; S < N; ++S) f[S] = logZ[S][n];
    moebius(f, n_cells);
    for (std::size_t S = 1; S < N; ++S) H[S] += f[S];
    res.order_totals[n] = logZ[N - 1][n];
  }
  for (std::size_t S = 1; S < N; ++S)
    if (H[S] != 0.0) res.H_sharp[static_cast<CellMask>(S)] = H[S];
  for (std::size_t n = 1; n < terms; ++n) res.total += res.order_totals[n];

  // Alternating estimate from the last two orders; tree-graph estimate from
  // the per-cell activity sum.
  const double last = std::abs(res.order_totals[terms - 1]), prev = std::abs(res.order_totals[terms - 2]);
  const double inf = std::numeric_limits<double>::infinity();
  if (n_max >= 2 && prev > 0.0) {
    double r = last / prev;
    res.tail.alternating = r < 1.0 ? last * r / (1.0 - r) : inf;
  } else {
    res.tail.alternating = last == 0.0 ? 0.0 : inf;
  }
  double a = 0.0;
  for (int c = 0; c < n_cells; ++c) {
    double s = 0.0;
    for (const auto& [Y, k] : sup)
      if (Y >> c & 1u) s += std::abs(k) * std::popcount(Y);
    a = std::max(a, s);
  }
  const double q = std::exp(1.0) * a;
  res.tail.tree_graph = q < 1.0 ? n_cells * std::pow(q, n_max + 1) / (1.0 - q) : inf;
  res.tail.reported = std::min(res.tail.alternating, res.tail.tree_graph);
  res.tail.summable = std::isfinite(res.tail.reported);
  return res;
}

std::map<CellMask, double> connected_amplitudes_exact(const std::map<CellMask, double>& K_sharp, int n_cells) {
  if (n_cells > 16) throw CapExceeded("cluster instances are limited to 16 cells");
  const std::size_t N = std::size_t{1} << n_cells;
  const auto sup = support(K_sharp);
  std::vector<double> Z(N, 0.0);
  Z[0] = 1.0;
  for (std::size_t S = 1; S < N; ++S) {
    const CellMask low = CellMask{1} << std::countr_zero(S);
    Z[S] = Z[S ^ low];
    for (const auto& [Y, k] : sup)
      if ((Y & low) && !(Y & ~static_cast<CellMask>(S))) Z[S] += k * Z[S ^ Y];
  }
  std::vector<double> f(N);
  for (std::size_t S = 0; S < N; ++S) {
    if (!(Z[S] > 0.0)) throw NumericalError("polymer gas partition function is not positive");
    f[S] = std::log(Z[S]);
  }
  moebius(f, n_cells);
  std::map<CellMask, double> out;
  for (std::size_t S = 1; S < N; ++S)
    if (f[S] != 0.0) out[static_cast<CellMask>(S)] = f[S];
  return out;
}

std::map<CellMask, double> connected_amplitudes_rho(const std::map<CellMask, double>& K_sharp, int n_max) {
  const auto sup = support(K_sharp);
  const std::size_t s = sup.size();
  std::map<CellMask, double> out;
  if (s == 0) return out;
  double fact = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    fact *= n;
    double count = std::pow(static_cast<double>(s), n);
    if (count > 5e6) throw CapExceeded("ordered tuple enumeration exceeds cap");
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    std::vector<CellMask> fam(static_cast<std::size_t>(n));
    for (;;) {
      CellMask u = 0;
      double prod = 1.0;
      for (int i = 0; i < n; ++i) {
        const auto& [Y, k] = sup[idx[static_cast<std::size_t>(i)]];
        fam[static_cast<std::size_t>(i)] = Y;
        u |= Y;
        prod *= k;
      }
      double rho = connected_rho_T(fam);
      if (rho != 0.0) out[u] += rho * prod / fact;
      int pos = 0;
      while (pos < n && ++idx[static_cast<std::size_t>(pos)] == s) idx[static_cast<std::size_t>(pos++)] = 0;
      if (pos == n) break;
    }
  }
  return out;
}

double brute_force_log_xi(const ClusterInstance& inst, CellMask restrict_to, const Caps& caps) {
  std::vector<const ClusterPolymer*> inside;
  for (const auto& p : inst.polymers)
    if ((p.cells & ~restrict_to) == 0) inside.push_back(&p);
  auto sites = inst.sites_of(restrict_to);
  double xi = integrate_over(inst, sites, caps, true, [&](const double* W) {
    double s = 0.0;
    for (auto* p : inside) s += p->H(W);
    return std::exp(s);
  });
  return std::log(xi);
}

BruteForceResult brute_force_log_partition(const ClusterInstance& inst, const Caps& caps) {
  inst.validate();
  const int n = inst.n_cells();
  const std::size_t N = std::size_t{1} << n;
  std::vector<double> f(N, 0.0);
  for (std::size_t S = 1; S < N; ++S) f[S] = brute_force_log_xi(inst, static_cast<CellMask>(S), caps);
  BruteForceResult r;
  r.log_xi = f[N - 1];
  moebius(f, n);
  for (std::size_t S = 1; S < N; ++S)
    if (f[S] != 0.0) r.H_exact[static_cast<CellMask>(S)] = f[S];
  return r;
}

ClusterResult run_cluster_expansion(const ClusterInstance& inst, int n_max, const Caps& caps) {
  auto K = mayer_amplitudes(inst, caps);
  auto Ks = integrate_amplitudes(inst, K, caps);
  return connected_amplitudes(Ks, inst.n_cells(), n_max);
}

DecayReport decay_bound_report(const ClusterInstance& inst, const ClusterResult& res, const CubeTorus& torus,
                               double kappa, double kappa0, double c0) {
  if (torus.count() != inst.n_cells()) throw ConfigError("cube torus does not match the cells");
  DecayReport r;
  for (const auto& p : inst.polymers) {
    auto sites = inst.sites_of(p.cells);
    std::vector<Rule1D> rules(sites.size(), inst.measure.rule);
    std::vector<double> W(static_cast<std::size_t>(inst.n_sites), 0.0);
    double sup = 0.0;
    const std::int64_t n = kernels::grid_size(rules);
    kernels::GridCursor cur(rules, 0);
    for (std::int64_t i = 0; i < n; ++i, cur.next()) {
      for (std::size_t j = 0; j < sites.size(); ++j) W[static_cast<std::size_t>(sites[j])] = cur.point()[j];
      sup = std::max(sup, std::abs(p.H(W.data())));
    }
    r.H0 = std::max(r.H0, sup * std::exp(kappa * mst_length(torus, p.cells)));
  }
  r.hypothesis_ok = r.H0 <= c0;
  std::map<double, double> env;
  for (const auto& [Y, h] : res.H_sharp) {
    double d = mst_length(torus, Y);
    auto [it, fresh] = env.emplace(d, std::abs(h));
    if (!fresh) it->second = std::max(it->second, std::abs(h));
  }
  std::vector<double> ds, vs;
  for (const auto& [d, v] : env) {
    r.samples.emplace_back(d, v);
    ds.push_back(d);
    vs.push_back(v);
  }
  r.fitted_rate = fit_exponential(ds, vs).gamma;
  r.required_rate = kappa - 3.0 * kappa0 - 3.0;
  return r;
}

}  // namespace blockrg
