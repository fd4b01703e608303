#include "blockrg/polymer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "blockrg/error.hpp"

namespace blockrg {

CubeTorus::CubeTorus(int d, Index n) : d_(d), n_(n), count_(ipow(n, d)) {
  if (d < 1 || d > 3) throw ConfigError("cube torus dimension must be 1, 2 or 3");
  if (n < 1) throw ConfigError("cube torus needs at least one cube per side");
}

Coord CubeTorus::coords(Index c) const {
  Coord x{0, 0, 0};
  for (int mu = 0; mu < d_; ++mu) {
    x[static_cast<std::size_t>(mu)] = c % n_;
    c /= n_;
  }
  return x;
}

Index CubeTorus::index(const Coord& x) const {
  Index c = 0;
  for (int mu = d_ - 1; mu >= 0; --mu) {
    Index v = ((x[static_cast<std::size_t>(mu)] % n_) + n_) % n_;
    c = c * n_ + v;
  }
  return c;
}

std::vector<Index> CubeTorus::face_neighbors(Index c) const {
  std::vector<Index> out;
  Coord x = coords(c);
  for (int mu = 0; mu < d_; ++mu)
    for (int s : {-1, 1}) {
      Coord y = x;
      y[static_cast<std::size_t>(mu)] += s;
      Index j = index(y);
      if (j != c && std::find(out.begin(), out.end(), j) == out.end()) out.push_back(j);
    }
  return out;
}

Index CubeTorus::distance(Index a, Index b) const {
  Coord x = coords(a), y = coords(b);
  Index best = 0;
  for (int mu = 0; mu < d_; ++mu) {
    auto u = static_cast<std::size_t>(mu);
    Index t = ((x[u] - y[u]) % n_ + n_) % n_;
    best = std::max(best, std::min(t, n_ - t));
  }
  return best;
}

bool is_connected(const CubeTorus& t, const std::vector<Index>& cubes) {
  if (cubes.empty()) throw DomainError("connectivity of an empty cube set");
  std::set<Index> in(cubes.begin(), cubes.end()), seen{cubes.front()};
  std::vector<Index> stack{cubes.front()};
  while (!stack.empty()) {
    Index c = stack.back();
    stack.pop_back();
    for (Index n : t.face_neighbors(c))
      if (in.count(n) && seen.insert(n).second) stack.push_back(n);
  }
  return seen.size() == in.size();
}

double tree_distance(const CubeTorus& t, const std::vector<Index>& cubes) {
  if (!is_connected(t, cubes)) throw DomainError("tree distance of a disconnected cube set");
  // Prim over the complete graph; ties broken by lowest index.
  const std::size_t n = cubes.size();
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
      if (!done[i]) best[i] = std::min(best[i], t.distance(cubes[pick], cubes[i]));
  }
  return static_cast<double>(total);
}

namespace {
std::vector<Index> canonical(std::vector<Index> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}
}  // namespace

Polymer::Polymer(const CubeTorus& t, std::vector<Index> cubes) : t_(t), cubes_(canonical(std::move(cubes))) {
  if (cubes_.empty()) throw DomainError("empty polymer");
  for (Index c : cubes_)
    if (c < 0 || c >= t.count()) throw DomainError("polymer cube out of range");
  dM_ = tree_distance(t_, cubes_);
}

bool Polymer::contains(Index c) const { return std::binary_search(cubes_.begin(), cubes_.end(), c); }

bool Polymer::intersects(const Polymer& o) const {
  std::size_t i = 0, j = 0;
  while (i < cubes_.size() && j < o.cubes_.size()) {
    if (cubes_[i] == o.cubes_[j]) return true;
    if (cubes_[i] < o.cubes_[j])
      ++i;
    else
      ++j;
  }
  return false;
}

bool Polymer::subset_of(const Polymer& o) const {
  return std::includes(o.cubes_.begin(), o.cubes_.end(), cubes_.begin(), cubes_.end());
}

std::vector<Polymer> enumerate_polymers(const CubeTorus& t, Index cube, int max_size, std::size_t cap) {
  if (max_size < 1) return {};
  if (static_cast<Index>(max_size) > t.count()) throw ConfigError("max_size exceeds the torus");
  std::vector<Polymer> out;
  std::set<std::vector<Index>> level{{cube}};
  for (int n = 1; n <= max_size; ++n) {
    for (const auto& s : level) out.emplace_back(t, s);
    if (out.size() > cap) throw CapExceeded("polymer enumeration cap exceeded");
    if (n == max_size) break;
    std::set<std::vector<Index>> next;
    for (const auto& s : level)
      for (Index c : s)
        for (Index nb : t.face_neighbors(c)) {
          if (std::binary_search(s.begin(), s.end(), nb)) continue;
          auto grown = s;
          grown.insert(std::upper_bound(grown.begin(), grown.end(), nb), nb);
          next.insert(std::move(grown));
        }
    if (next.size() > cap) throw CapExceeded("polymer enumeration cap exceeded");
    level = std::move(next);
  }
  return out;
}

std::vector<Polymer> enumerate_polymers_meeting(const CubeTorus& t, const std::vector<Index>& Y, int max_size,
                                                std::size_t cap) {
  std::set<Polymer> all;
  for (Index c : Y)
    for (auto& p : enumerate_polymers(t, c, max_size, cap)) all.insert(std::move(p));
  std::vector<Polymer> out(all.begin(), all.end());
  std::stable_sort(out.begin(), out.end(), [](const Polymer& a, const Polymer& b) { return a.size() < b.size(); });
  return out;
}

double path_count_bound(int d, int n) { return std::pow(std::pow(2.0, d), 2.0 * (n - 1)); }

CountingReport counting_bounds_report(int d, int max_size, double a, double kappa0) {
  CountingReport r;
  r.d = d;
  r.a = a;
  r.kappa0 = kappa0;
  CubeTorus t(d, 2 * max_size + 1);
  auto polys = enumerate_polymers(t, 0, max_size);
  r.rows.resize(static_cast<std::size_t>(max_size));
  for (int n = 1; n <= max_size; ++n) {
    auto& row = r.rows[static_cast<std::size_t>(n - 1)];
    row.size = n;
    row.path_bound = path_count_bound(d, n);
  }
  for (const auto& p : polys) {
    auto& row = r.rows[static_cast<std::size_t>(p.size() - 1)];
    ++row.count;
    row.sum_exp_a += std::exp(-a * static_cast<double>(p.size()));
    row.sum_exp_kappa += std::exp(-kappa0 * p.d_M());
  }
  for (const auto& row : r.rows) {
    r.partial_a += row.sum_exp_a;
    r.partial_kappa += row.sum_exp_kappa;
    r.majorant_a += row.path_bound * std::exp(-a * row.size);
    if (static_cast<double>(row.count) > row.path_bound) r.counts_within_bound = false;
    if (row.count > 0) r.b = std::max(r.b, std::log(static_cast<double>(row.count)) / row.size);
  }
  // Beyond the cap: sum_{n > cap} 4^{d(n-1)} x^n with d_M >= 0 for the kappa sum
  // taken as d_M = n - 1 (exact for face-connected polymers under the tree metric).
  const double g = std::pow(4.0, d);
  auto tail = [&](double ratio, double first) {
    return ratio < 1.0 ? first / (1.0 - ratio) : std::numeric_limits<double>::infinity();
  };
  const double n1 = max_size + 1;
  r.tail_a = tail(g * std::exp(-a), std::pow(g, n1 - 1) * std::exp(-a * n1));
  r.tail_kappa = tail(g * std::exp(-kappa0), std::pow(g * std::exp(-kappa0), n1 - 1));
  r.K0 = r.partial_kappa + r.tail_kappa;
  return r;
}

Polymer reblock(const Polymer& X, int L) {
  const CubeTorus& t = X.torus();
  if (L < 3 || L % 2 == 0) throw ConfigError("L must be odd and at least 3");
  if (t.n() % L != 0) throw ConfigError("cube torus side is not a multiple of L");
  CubeTorus coarse(t.d(), t.n() / L);
  const Index half = (L - 1) / 2;
  std::vector<Index> out;
  for (Index c : X.cubes()) {
    Coord x = t.coords(c), y{0, 0, 0};
    for (int mu = 0; mu < t.d(); ++mu) {
      auto u = static_cast<std::size_t>(mu);
      y[u] = ((x[u] + half) / L) % coarse.n();
    }
    out.push_back(coarse.index(y));
  }
  return Polymer(coarse, std::move(out));
}

bool is_small(const Polymer& X, int L) { return X.d_M() < static_cast<double>(L); }

SuperadditivityResult tree_superadditivity_check(const Polymer& X, const Polymer& Y) {
  if (!(X.torus() == Y.torus()) || !X.subset_of(Y)) throw DomainError("superadditivity requires X inside Y");
  SuperadditivityResult r;
  r.lhs = Y.d_M();
  r.rhs = static_cast<double>(Y.size() - X.size()) + X.d_M();
  r.ok = r.lhs <= r.rhs + 1e-12;
  return r;
}

std::vector<Polymer> sub_polymers(const Polymer& X) {
  const auto& c = X.cubes();
  if (c.size() > 20) throw CapExceeded("sub-polymer enumeration limited to 20 cubes");
  std::vector<Polymer> out;
  for (std::uint32_t mask = 1; mask < (1u << c.size()); ++mask) {
    std::vector<Index> s;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (mask >> i & 1u) s.push_back(c[i]);
    if (is_connected(X.torus(), s)) out.emplace_back(X.torus(), std::move(s));
  }
  return out;
}

namespace {
bool overlap_connected(const std::vector<const Polymer*>& fam) {
  std::vector<char> seen(fam.size(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < fam.size(); ++j)
      if (!seen[j] && fam[i]->intersects(*fam[j])) {
        seen[j] = 1;
        stack.push_back(j);
      }
  }
  return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
}

// Chain bound over indivisible covers of Y by up to three sub-polymers.
std::size_t clams_violations(const Polymer& Y) {
  auto subs = sub_polymers(Y);
  std::size_t bad = 0;
  const std::size_t n = subs.size();
  auto check = [&](std::vector<const Polymer*> fam) {
    std::set<Index> u;
    for (auto* p : fam) u.insert(p->cubes().begin(), p->cubes().end());
    if (u.size() != Y.cubes().size() || !overlap_connected(fam)) return;
    double rhs = static_cast<double>(fam.size()) - 1.0;
    for (auto* p : fam) rhs += p->d_M();
    if (Y.d_M() > rhs + 1e-12) ++bad;
  };
  for (std::size_t i = 0; i < n; ++i) {
    check({&subs[i]});
    for (std::size_t j = i + 1; j < n; ++j) {
      check({&subs[i], &subs[j]});
      for (std::size_t k = j + 1; k < n; ++k) check({&subs[i], &subs[j], &subs[k]});
    }
  }
  return bad;
}
}  // namespace

GeometryViolations polymer_geometry_audit(int d, int max_size, int clams_max_size, int L) {
  Index n = 2 * max_size + 1;
  n = (n + L - 1) / L * L;
  CubeTorus t(d, n);
  auto polys = enumerate_polymers(t, 0, max_size);
  GeometryViolations v;
  std::vector<std::size_t> counts(static_cast<std::size_t>(max_size) + 1, 0);
  const double three_d = std::pow(3.0, d);
  for (const auto& Y : polys) {
    ++v.checked;
    ++counts[static_cast<std::size_t>(Y.size())];
    double s = static_cast<double>(Y.size());
    if (!(Y.d_M() <= s && s <= three_d * (1.0 + Y.d_M()))) ++v.ninety;
    if (Y.size() <= 5)
      for (const auto& X : sub_polymers(Y))
        if (!tree_superadditivity_check(X, Y).ok) ++v.salsa;
    if (Y.size() <= clams_max_size) v.clams += clams_violations(Y);
    if (Y.d_M() < L * reblock(Y, L).d_M()) ++v.reblock_distance;
  }
  for (int k = 1; k <= max_size; ++k)
    if (static_cast<double>(counts[static_cast<std::size_t>(k)]) > path_count_bound(d, k)) ++v.path_count;
  return v;
}

}  // namespace blockrg
