#include "blockrg/averaging.hpp"

#include "blockrg/error.hpp"

#include <random>

namespace blockrg {

namespace {
Index floor_div(Index a, Index b) {
  Index q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
}  // namespace

BlockMap::BlockMap(const TorusLattice& fine, int j)
    : fine_(fine), coarse_(fine.coarsened(j)), j_(j), b_(ipow(fine.L(), j)), bsize_(ipow(b_, fine.d())) {
  const Index half = (b_ - 1) / 2;
  const Index nc = coarse_.side();
  block_of_.resize(static_cast<std::size_t>(fine_.size()));
  sites_of_.assign(static_cast<std::size_t>(coarse_.size()), {});
  for (Index i = 0; i < fine_.size(); ++i) {
    Coord x = fine_.coords(i);
    Coord y{0, 0, 0};
    for (int mu = 0; mu < fine_.d(); ++mu) {
      Index c = floor_div(x[mu] + half, b_) % nc;
      y[mu] = c < 0 ? c + nc : c;
    }
    Index yi = coarse_.index(y);
    block_of_[static_cast<std::size_t>(i)] = yi;
    sites_of_[static_cast<std::size_t>(yi)].push_back(i);
  }
}

Field BlockMap::apply_q(const Field& f) const {
  if (f.lattice() != fine_) throw ConfigError("apply_q: field not on the fine lattice");
  Field out(coarse_);
  for (Index y = 0; y < coarse_.size(); ++y) {
    double s = 0.0;
    for (Index x : sites_of(y)) s += f[x];
    out[y] = s / static_cast<double>(bsize_);
  }
  return out;
}

ComplexField BlockMap::apply_q(const ComplexField& f) const {
  if (f.lattice() != fine_) throw ConfigError("apply_q: field not on the fine lattice");
  ComplexField out(coarse_);
  for (Index y = 0; y < coarse_.size(); ++y) {
    std::complex<double> s = 0.0;
    for (Index x : sites_of(y)) s += f[x];
    out[y] = s / static_cast<double>(bsize_);
  }
  return out;
}

Field BlockMap::apply_qt(const Field& g) const {
  if (g.lattice() != coarse_) throw ConfigError("apply_qt: field not on the coarse lattice");
  Field out(fine_);
  for (Index x = 0; x < fine_.size(); ++x) out[x] = g[block_of(x)];
  return out;
}

Matrix BlockMap::q_matrix() const {
  Matrix Q = Matrix::Zero(coarse_.size(), fine_.size());
  double w = 1.0 / static_cast<double>(bsize_);
  for (Index x = 0; x < fine_.size(); ++x) Q(block_of(x), x) = w;
  return Q;
}

Matrix BlockMap::qt_matrix() const {
  Matrix T = Matrix::Zero(fine_.size(), coarse_.size());
  for (Index x = 0; x < fine_.size(); ++x) T(x, block_of(x)) = 1.0;
  return T;
}

Matrix BlockMap::projection_matrix() const {
  Matrix P = Matrix::Zero(fine_.size(), fine_.size());
  double w = 1.0 / static_cast<double>(bsize_);
  for (Index y = 0; y < coarse_.size(); ++y)
    for (Index a : sites_of(y))
      for (Index b : sites_of(y)) P(a, b) = w;
  return P;
}

BlockMap compose(const BlockMap& map1, const BlockMap& map2) {
  if (map1.coarse() != map2.fine()) throw ConfigError("compose: incompatible chain");
  return BlockMap(map1.fine(), map1.levels() + map2.levels());
}

double scale_commutation_error(const BlockMap& map, const Field& f) {
  Field lhs = BlockMap(map.fine().scaled_up(), map.levels()).apply_q(scale_field(f, ScaleDirection::up));
  Field rhs = scale_field(map.apply_q(f), ScaleDirection::up);
  if (lhs.lattice() != rhs.lattice()) throw ConfigError("scale commutation: lattice mismatch");
  return (lhs.values() - rhs.values()).cwiseAbs().maxCoeff();
}

double AveragingReport::max() const { return std::max({composition, qqt, projection, constants, adjoint, scaling}); }

AveragingReport averaging_identity_check(int d, int L, int k, int j1, int j2, Index coarse_side, int samples,
                                         unsigned seed) {
  TorusLattice fine(d, L, -k, coarse_side * ipow(L, j1 + j2));
  BlockMap q1(fine, j1), q2(q1.coarse(), j2), q12(fine, j1 + j2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  auto random = [&](const TorusLattice& lat) {
    Field f(lat);
    for (Index x = 0; x < lat.size(); ++x) f[x] = n(rng);
    return f;
  };
  auto rel = [](const Field& a, const Field& b) {
    return (a.values() - b.values()).cwiseAbs().maxCoeff() / std::max(1.0, b.values().cwiseAbs().maxCoeff());
  };
  AveragingReport r;
  r.constants = rel(q12.apply_q(Field::constant(fine, 1.0)), Field::constant(q12.coarse(), 1.0));
  {
    BlockMap small(TorusLattice(d, L, -k, coarse_side * L), 1);
    const Matrix P = small.qt_matrix() * small.q_matrix();
    r.projection = (P * P - P).cwiseAbs().maxCoeff();
  }
  for (int s = 0; s < samples; ++s) {
    Field f = random(fine);
    Field g = random(q12.coarse());
    r.composition = std::max(r.composition, rel(q12.apply_q(f), q2.apply_q(q1.apply_q(f))));
    r.qqt = std::max(r.qqt, rel(q12.apply_q(q12.apply_qt(g)), g));
    const double lhs = inner_product(q12.apply_q(f), g);
    const double rhs = inner_product(f, q12.apply_qt(g));
    r.adjoint = std::max(r.adjoint, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    r.scaling = std::max(r.scaling, scale_commutation_error(q1, f));
  }
  return r;
}

}  // namespace blockrg
