#include "blockrg/greens.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "blockrg/error.hpp"
#include "blockrg/kernels.hpp"
#include "blockrg/linalg.hpp"

namespace blockrg {

namespace {

double smoothstep5(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

// Signed minimal-image offset of a from b on a ring of n sites.
Index ring_offset(Index a, Index b, Index n) {
  Index t = ((a - b) % n + n) % n;
  if (2 * t > n) t -= n;
  return t;
}

}  // namespace

double bump_profile(double u) {
  u = std::abs(u);
  if (u <= 1.0 / 3.0) return 1.0;
  if (u >= 2.0 / 3.0) return 0.0;
  return std::cos(0.5 * std::numbers::pi * smoothstep5(3.0 * u - 1.0));
}

CubeLayout::CubeLayout(const TorusLattice& fine, int m) : blocks_(fine, m - fine.spacing_exp()), m_(m) {
  if (m < 0) throw ConfigError("cube exponent must be nonnegative");
}

std::vector<Index> CubeLayout::neighbors(Index cube) const {
  const TorusLattice& c = centers();
  Coord x = c.coords(cube);
  std::set<Index> out;
  int total = 1;
  for (int mu = 0; mu < c.d(); ++mu) total *= 3;
  for (int p = 0; p < total; ++p) {
    Coord y = x;
    int q = p;
    for (int mu = 0; mu < c.d(); ++mu) {
      y[static_cast<std::size_t>(mu)] += q % 3 - 1;
      q /= 3;
    }
    out.insert(c.index(y));
  }
  return {out.begin(), out.end()};
}

Region CubeLayout::region(const std::vector<Index>& cubes) const {
  std::vector<Index> sites;
  for (Index c : cubes) {
    const auto& s = sites_of(c);
    sites.insert(sites.end(), s.begin(), s.end());
  }
  return Region(fine(), std::move(sites));
}

PartitionOfUnity::PartitionOfUnity(const TorusLattice& fine, int m) : layout_(fine, m) {
  const TorusLattice& c = layout_.centers();
  const Index b = layout_.cube_sites_per_side();
  const int d = fine.d();
  h_.assign(static_cast<std::size_t>(c.size()), Vector::Zero(fine.size()));
  for (Index z = 0; z < c.size(); ++z) {
    Coord zc = c.coords(z);
    Vector& h = h_[static_cast<std::size_t>(z)];
    for (Index x = 0; x < fine.size(); ++x) {
      Coord xc = fine.coords(x);
      double v = 1.0;
      for (int mu = 0; mu < d && v != 0.0; ++mu) {
        if (c.side() == 1) continue;
        auto u = static_cast<std::size_t>(mu);
        Index t = ring_offset(xc[u], zc[u] * b, fine.side());
        v *= bump_profile(static_cast<double>(t) / static_cast<double>(b));
      }
      h[x] = v;
    }
  }
}

double PartitionOfUnity::max_sum_sq_error() const {
  Vector s = Vector::Zero(layout_.fine().size());
  for (const auto& h : h_) s += h.cwiseProduct(h);
  return (s.array() - 1.0).abs().maxCoeff();
}

double PartitionOfUnity::c_first() const {
  const TorusLattice& f = layout_.fine();
  const double M = dpow(f.L(), layout_.m());
  double best = 0.0;
  for (const auto& h : h_)
    for (int mu = 0; mu < f.d(); ++mu)
      best = std::max(best, sup_norm(forward_derivative(Field(f, h), mu)) * M);
  return best;
}

double PartitionOfUnity::c_second() const {
  const TorusLattice& f = layout_.fine();
  const double M = dpow(f.L(), layout_.m());
  double best = 0.0;
  for (const auto& h : h_)
    for (int mu = 0; mu < f.d(); ++mu)
      for (int nu = 0; nu < f.d(); ++nu)
        best = std::max(best, sup_norm(forward_derivative(forward_derivative(Field(f, h), mu), nu)) * M * M);
  return best;
}

bool PartitionOfUnity::support_ok() const {
  const TorusLattice& f = layout_.fine();
  const TorusLattice& c = layout_.centers();
  const Index b = layout_.cube_sites_per_side();
  for (Index z = 0; z < c.size(); ++z) {
    Coord zc = c.coords(z);
    const Vector& h = h_[static_cast<std::size_t>(z)];
    for (Index x = 0; x < f.size(); ++x) {
      Coord xc = f.coords(x);
      bool outside = false, inner = true;
      for (int mu = 0; mu < f.d(); ++mu) {
        if (c.side() == 1) continue;
        auto u = static_cast<std::size_t>(mu);
        double t = std::abs(static_cast<double>(ring_offset(xc[u], zc[u] * b, f.side()))) / static_cast<double>(b);
        if (t >= 2.0 / 3.0) outside = true;
        if (t > 1.0 / 3.0) inner = false;
      }
      if (outside && h[x] != 0.0) return false;
      if (inner && h[x] != 1.0) return false;
    }
  }
  return true;
}

Matrix neumann_operator_local(const Region& region, const Matrix& V) {
  const auto& sites = region.sites();
  const Index n = region.size();
  if (n == 0) throw DomainError("empty region");
  if (V.rows() != region.lattice().size() || V.cols() != V.rows()) throw ConfigError("potential has wrong size");
  for (Index x : sites)
    for (Index y = 0; y < V.cols(); ++y)
      if (!region.contains(y) && V(x, y) != 0.0) throw DomainError("potential couples the region to its complement");
  Matrix A = -neumann_laplacian_local(region);
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b) A(a, b) += V(sites[static_cast<std::size_t>(a)], sites[static_cast<std::size_t>(b)]);
  return A;
}

Matrix neumann_green(const Region& region, const Matrix& V) {
  if (region_wraps(region)) throw DomainError("region wraps around the torus and cannot be embedded");
  Matrix Gl = spd_inverse(neumann_operator_local(region, V));
  const auto& sites = region.sites();
  Matrix G = Matrix::Zero(V.rows(), V.cols());
  for (std::size_t a = 0; a < sites.size(); ++a)
    for (std::size_t b = 0; b < sites.size(); ++b)
      G(sites[a], sites[b]) = Gl(static_cast<Index>(a), static_cast<Index>(b));
  return G;
}

Matrix gk_potential(const GaussianLevel& g) {
  Matrix V = g.params().a_k() * g.Qk().projection_matrix();
  V.diagonal().array() += g.params().mu_bar_k;
  return V;
}

Matrix gkr_potential(const GaussianLevel& g, double r) {
  if (r < 0.0) throw DomainError("r must be nonnegative");
  double ak = g.params().a_k(), b = g.params().b();
  double c1 = ak * r / (ak + r);
  double c2 = ak * ak * b / ((ak + r) * (ak + b + r));
  Matrix V = c1 * g.Qk().projection_matrix() + c2 * g.Qk1().projection_matrix();
  V.diagonal().array() += g.params().mu_bar_k;
  return V;
}

bool region_wraps(const Region& region) {
  const TorusLattice& lat = region.lattice();
  if (region.size() == lat.size()) return false;
  for (int mu = 0; mu < lat.d(); ++mu) {
    std::vector<char> seen(static_cast<std::size_t>(lat.side()), 0);
    for (Index x : region.sites()) seen[static_cast<std::size_t>(lat.coords(x)[static_cast<std::size_t>(mu)])] = 1;
    if (std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; })) return true;
  }
  return false;
}

RandomWalk::RandomWalk(const PartitionOfUnity& pou, const Matrix& V) : pou_(pou) {
  const CubeLayout& lay = pou_.layout();
  const TorusLattice& f = lay.fine();
  if (lay.count() > 64) throw CapExceeded("random walk supports at most 64 cubes");
  A_ = -laplacian_matrix(f) + V;
  const Index N = f.size();
  Gstar_ = Matrix::Zero(N, N);
  K_ = Matrix::Zero(N, N);
  const auto nc = static_cast<std::size_t>(lay.count());
  S_.resize(nc);
  T_.resize(nc);
  Kz_.resize(nc);
  emask_.assign(nc, 0);
  for (Index z = 0; z < lay.count(); ++z) {
    auto u = static_cast<std::size_t>(z);
    auto nb = lay.neighbors(z);
    for (Index c : nb) emask_[u] |= std::uint64_t{1} << c;
    Matrix Gz = neumann_green(lay.region(nb), V);
    const Vector& h = pou_.h(z);
    Matrix Kz = h.asDiagonal() * A_ - A_ * h.asDiagonal();
    S_[u] = h.asDiagonal() * Gz * h.asDiagonal();
    T_[u] = Kz * Gz * h.asDiagonal();
    Kz_[u] = std::move(Kz);
    Gstar_ += S_[u];
    K_ += T_[u];
  }
}

double RandomWalk::parametrix_residual() const {
  Matrix I = Matrix::Identity(A_.rows(), A_.cols());
  return max_abs_diff(A_ * Gstar_, I - K_);
}

double RandomWalk::defect_norm() const { return operator_norm(K_); }

namespace {
void finish(WalkDiagnostics& d) {
  d.max_ratio = 0.0;
  d.ratios.clear();
  for (std::size_t n = 1; n < d.order_norms.size(); ++n) {
    double r = d.order_norms[n - 1] > 0.0 ? d.order_norms[n] / d.order_norms[n - 1] : 0.0;
    d.ratios.push_back(r);
    d.max_ratio = std::max(d.max_ratio, r);
  }
  d.converging = d.max_ratio < 1.0;
}
}  // namespace

WalkResult RandomWalk::expand_with(int n_max, const Matrix& K) const {
  if (n_max < 0) throw ConfigError("n_max must be nonnegative");
  WalkResult out;
  Matrix term = Gstar_;
  out.sum = term;
  out.diag.order_norms.push_back(max_abs(term));
  for (int n = 1; n <= n_max; ++n) {
    term = term * K;
    out.sum += term;
    out.diag.order_norms.push_back(max_abs(term));
  }
  finish(out.diag);
  return out;
}

WalkResult RandomWalk::expand(int n_max) const { return expand_with(n_max, K_); }

WalkResult RandomWalk::expand_corner(int n_max, std::uint64_t on) const {
  Matrix K = Matrix::Zero(K_.rows(), K_.cols());
  for (std::size_t z = 0; z < T_.size(); ++z)
    if ((emask_[z] & ~on) == 0) K += T_[z];
  return expand_with(n_max, K);
}

WalkResultC RandomWalk::expand_weighted(int n_max, const std::vector<std::complex<double>>& s,
                                        std::size_t state_cap) const {
  const auto nc = static_cast<std::size_t>(pou_.layout().count());
  if (s.size() != nc) throw ConfigError("one weight per cube required");
  if (n_max < 0) throw ConfigError("n_max must be nonnegative");
  auto weight = [&](std::uint64_t mask) {
    std::complex<double> w = 1.0;
    for (std::size_t c = 0; c < nc; ++c)
      if (mask >> c & 1) w *= s[c];
    return w;
  };
  std::vector<std::vector<Index>> nbrs(nc);
  for (std::size_t z = 0; z < nc; ++z) nbrs[z] = pou_.layout().neighbors(static_cast<Index>(z));

  using Key = std::pair<Index, std::uint64_t>;
  std::map<Key, Matrix> states;
  for (std::size_t z = 0; z < nc; ++z) states.emplace(Key{static_cast<Index>(z), 0}, S_[z]);

  WalkResultC out;
  const Index N = A_.rows();
  out.sum = CMatrix::Zero(N, N);
  for (int n = 0;; ++n) {
    std::map<std::uint64_t, Matrix> by_mask;
    for (const auto& [key, P] : states) {
      auto it = by_mask.find(key.second);
      if (it == by_mask.end())
        by_mask.emplace(key.second, P);
      else
        it->second += P;
    }
    CMatrix term = CMatrix::Zero(N, N);
    for (const auto& [mask, P] : by_mask) term += weight(mask) * P.cast<std::complex<double>>();
    out.sum += term;
    out.diag.order_norms.push_back(term.cwiseAbs().maxCoeff());
    if (n == n_max) break;

    std::map<Key, Matrix> next;
    for (const auto& [key, P] : states) {
      for (Index w : nbrs[static_cast<std::size_t>(key.first)]) {
        auto u = static_cast<std::size_t>(w);
        Key k2{w, key.second | emask_[u]};
        Matrix step = P * T_[u];
        auto it = next.find(k2);
        if (it == next.end())
          next.emplace(k2, std::move(step));
        else
          it->second += step;
      }
      if (next.size() > state_cap) throw CapExceeded("weighted walk state count exceeds cap");
    }
    states = std::move(next);
  }
  finish(out.diag);
  return out;
}

DecayFit fit_exponential(const std::vector<double>& dist, const std::vector<double>& value) {
  if (dist.size() != value.size()) throw ConfigError("fit inputs differ in length");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0 || !(value[i] > 1e-300)) continue;
    double y = std::log(value[i]);
    sx += dist[i];
    sy += y;
    sxx += dist[i] * dist[i];
    sxy += dist[i] * y;
    ++n;
  }
  DecayFit fit;
  fit.points = n;
  double den = n * sxx - sx * sx;
  if (n < 2 || std::abs(den) < 1e-14) return fit;
  double slope = (n * sxy - sx * sy) / den;
  fit.gamma = -slope;
  fit.C = std::exp((sy - slope * sx) / n);
  return fit;
}

namespace {
std::vector<DecaySample> envelope(const std::map<double, double>& m) {
  std::vector<DecaySample> out;
  for (const auto& [d, v] : m) out.push_back({d, v});
  return out;
}

void keep_max(std::map<double, double>& m, double d, double v) {
  auto [it, fresh] = m.emplace(d, v);
  if (!fresh) it->second = std::max(it->second, v);
}

bool block_inside(const BlockMap& blocks, Index y, const Region* r) {
  if (!r) return true;
  for (Index x : blocks.sites_of(y))
    if (!r->contains(x)) return false;
  return true;
}
}  // namespace

std::vector<DecaySample> probe_decay(const Matrix& G, const BlockMap& unit_blocks, Index source_block,
                                     const Region* restrict_to) {
  Vector f = Vector::Zero(G.cols());
  for (Index x : unit_blocks.sites_of(source_block)) f[x] = 1.0;
  Vector u = G * f;
  const TorusLattice& c = unit_blocks.coarse();
  std::map<double, double> env;
  for (Index y = 0; y < c.size(); ++y) {
    if (!block_inside(unit_blocks, y, restrict_to)) continue;
    double v = 0.0;
    for (Index x : unit_blocks.sites_of(y)) v = std::max(v, std::abs(u[x]));
    keep_max(env, c.distance(y, source_block), v);
  }
  return envelope(env);
}

std::vector<DecaySample> block_norm_decay(const Matrix& G, const BlockMap& unit_blocks, bool parallel) {
  const TorusLattice& c = unit_blocks.coarse();
  std::vector<std::vector<Index>> groups;
  for (Index y = 0; y < c.size(); ++y) groups.push_back(unit_blocks.sites_of(y));
  Matrix T = parallel ? kernels::block_norm_table_parallel(G, groups, groups)
                      : kernels::block_norm_table_serial(G, groups, groups);
  std::map<double, double> env;
  for (Index a = 0; a < c.size(); ++a)
    for (Index b = 0; b < c.size(); ++b) keep_max(env, c.distance(a, b), T(a, b));
  return envelope(env);
}

namespace {
Vector holder_profile(const Matrix& G, const Field& f, double alpha) {
  return holder_site_profile(Field(f.lattice(), G * f.values()), alpha);
}
}  // namespace

Vector holder_site_profile(const Field& u, double alpha) {
  if (!(alpha > 0.5 && alpha < 1.0)) throw DomainError("Holder exponent must lie in (1/2, 1)");
  const TorusLattice& lat = u.lattice();
  const Index R = std::max<Index>(1, static_cast<Index>(std::llround(1.0 / lat.spacing())));
  Index width = std::min<Index>(2 * R + 1, lat.side());
  Index cells = ipow(width, lat.d());
  Vector best = Vector::Zero(lat.size());
  for (int mu = 0; mu < lat.d(); ++mu) {
    Field du = forward_derivative(u, mu);
    for (Index x = 0; x < lat.size(); ++x) {
      Coord xc = lat.coords(x);
      for (Index p = 0; p < cells; ++p) {
        Coord yc = xc;
        Index q = p;
        for (int nu = 0; nu < lat.d(); ++nu) {
          yc[static_cast<std::size_t>(nu)] += q % width - width / 2;
          q /= width;
        }
        Index y = lat.index(yc);
        double dist = lat.distance(x, y);
        if (dist <= 0.0 || dist > 1.0 + 1e-12) continue;
        best[x] = std::max(best[x], std::abs(du[x] - du[y]) / std::pow(dist, alpha));
      }
    }
  }
  return best;
}

double holder_seminorm(const Matrix& G, const Field& f, double alpha) {
  return holder_profile(G, f, alpha).maxCoeff();
}

HolderReport holder_decay(const Matrix& G, const BlockMap& unit_blocks, Index source_block, double alpha) {
  Field f(unit_blocks.fine());
  for (Index x : unit_blocks.sites_of(source_block)) f[x] = 1.0;
  Vector prof = holder_profile(G, f, alpha);
  const TorusLattice& c = unit_blocks.coarse();
  std::map<double, double> env;
  for (Index y = 0; y < c.size(); ++y) {
    double v = 0.0;
    for (Index x : unit_blocks.sites_of(y)) v = std::max(v, prof[x]);
    keep_max(env, c.distance(y, source_block), v);
  }
  HolderReport rep;
  rep.max_value = prof.maxCoeff();
  rep.samples = envelope(env);
  std::vector<double> ds, vs;
  for (const auto& s : rep.samples) {
    ds.push_back(s.dist);
    vs.push_back(s.value);
  }
  rep.fit = fit_exponential(ds, vs);
  return rep;
}

std::vector<DecaySeries> greens_decay_suite(int d, int L, int k, int m, Index unit_side, double a, double r,
                                            int region_cubes) {
  TorusLattice fine(d, L, -k, unit_side * ipow(L, k));
  GaussParams p;
  p.L = L;
  p.a = a;
  p.k = k;
  GaussianLevel g(fine, p);
  std::vector<DecaySeries> out;
  auto add = [&out](std::string name, std::vector<DecaySample> s) {
    std::vector<double> dist, val;
    for (const auto& x : s) {
      dist.push_back(x.dist);
      val.push_back(x.value);
    }
    DecayFit f = fit_exponential(dist, val);
    out.push_back({std::move(name), std::move(s), f});
  };
  add("G_k", block_norm_decay(g.G(), g.Qk()));
  add("G_k_r", block_norm_decay(g.G_r(r), g.Qk()));
  CubeLayout lay(fine, m);
  std::vector<Index> cubes;
  for (int i = 0; i < region_cubes; ++i) {
    Coord c{0, 0, 0};
    c[0] = i;
    cubes.push_back(lay.centers().index(c));
  }
  Region region = lay.region(cubes);
  Matrix G = neumann_green(region, gk_potential(g));
  add("G_k_box", probe_decay(G, g.Qk(), g.Qk().block_of(region.sites().front()), &region));
  return out;
}

}  // namespace blockrg
