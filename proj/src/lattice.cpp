#include "blockrg/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "blockrg/error.hpp"

namespace blockrg {

Index ipow(Index base, int e) {
  if (e < 0) throw ConfigError("ipow: negative exponent");
  Index r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

double dpow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < std::abs(e); ++i) r *= base;
  return e < 0 ? 1.0 / r : r;
}

double field_dimension(int d) { return 0.5 * (d - 2); }

TorusLattice::TorusLattice(int d, int L, int spacing_exp, Index side)
    : d_(d), L_(L), spacing_exp_(spacing_exp), side_(side) {
  if (d < 1 || d > 3) throw ConfigError("lattice dimension must be 1, 2 or 3");
  if (L < 3 || L % 2 == 0) throw ConfigError("L must be an odd integer >= 3");
  if (side < 1) throw ConfigError("lattice side must be positive");
  size_ = ipow(side, d);
  spacing_ = dpow(L, spacing_exp);
  weight_ = dpow(spacing_, d);
}

TorusLattice TorusLattice::level(int d, int L, int side_exp, int k) {
  if (side_exp + k < 0) throw ConfigError("level lattice needs side_exp + k >= 0");
  return TorusLattice(d, L, -k, ipow(L, side_exp + k));
}

Coord TorusLattice::coords(Index i) const {
  Coord x{0, 0, 0};
  for (int mu = 0; mu < d_; ++mu) {
    x[mu] = i % side_;
    i /= side_;
  }
  return x;
}

Index TorusLattice::index(const Coord& x) const {
  Index i = 0;
  for (int mu = d_ - 1; mu >= 0; --mu) {
    Index c = x[mu] % side_;
    if (c < 0) c += side_;
    i = i * side_ + c;
  }
  return i;
}

Index TorusLattice::shift(Index i, int mu, Index step) const {
  Coord x = coords(i);
  x[mu] += step;
  return index(x);
}

std::vector<Index> TorusLattice::neighbors(Index i) const {
  std::vector<Index> out;
  for (int mu = 0; mu < d_; ++mu) {
    out.push_back(shift(i, mu, 1));
    out.push_back(shift(i, mu, -1));
  }
  return out;
}

Index TorusLattice::axis_distance(Index i, Index j, int mu) const {
  Coord a = coords(i), b = coords(j);
  Index t = std::abs(a[mu] - b[mu]);
  return std::min(t, side_ - t);
}

Index TorusLattice::int_distance(Index i, Index j) const {
  Index m = 0;
  for (int mu = 0; mu < d_; ++mu) m = std::max(m, axis_distance(i, j, mu));
  return m;
}

TorusLattice TorusLattice::coarsened(int j) const {
  Index b = ipow(L_, j);
  if (side_ % b != 0) throw ConfigError("lattice side not divisible by L^j");
  return TorusLattice(d_, L_, spacing_exp_ + j, side_ / b);
}

TorusLattice TorusLattice::scaled_up() const { return TorusLattice(d_, L_, spacing_exp_ + 1, side_); }
TorusLattice TorusLattice::scaled_down() const { return TorusLattice(d_, L_, spacing_exp_ - 1, side_); }

template <class Scalar>
BasicField<Scalar>::BasicField(const TorusLattice& lat, Vec values) : lat_(lat), v_(std::move(values)) {
  if (v_.size() != lat_.size()) throw ConfigError("field length does not match lattice");
}

template <class Scalar>
BasicField<Scalar> BasicField<Scalar>::operator+(const BasicField& o) const {
  if (lat_ != o.lat_) throw ConfigError("field lattice mismatch");
  return BasicField(lat_, v_ + o.v_);
}

template <class Scalar>
BasicField<Scalar> BasicField<Scalar>::operator-(const BasicField& o) const {
  if (lat_ != o.lat_) throw ConfigError("field lattice mismatch");
  return BasicField(lat_, v_ - o.v_);
}

template class BasicField<double>;
template class BasicField<std::complex<double>>;

Region::Region(const TorusLattice& lat, std::vector<Index> sites) : lat_(lat), sites_(std::move(sites)) {
  std::sort(sites_.begin(), sites_.end());
  sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
  member_.assign(static_cast<std::size_t>(lat.size()), 0);
  local_.assign(static_cast<std::size_t>(lat.size()), -1);
  for (std::size_t a = 0; a < sites_.size(); ++a) {
    Index s = sites_[a];
    if (s < 0 || s >= lat.size()) throw ConfigError("region site out of range");
    member_[static_cast<std::size_t>(s)] = 1;
    local_[static_cast<std::size_t>(s)] = static_cast<Index>(a);
  }
}

Region Region::whole(const TorusLattice& lat) {
  std::vector<Index> all(static_cast<std::size_t>(lat.size()));
  for (Index i = 0; i < lat.size(); ++i) all[static_cast<std::size_t>(i)] = i;
  return Region(lat, std::move(all));
}

double inner_product(const Field& u, const Field& v) {
  if (u.lattice() != v.lattice()) throw ConfigError("inner_product: lattice mismatch");
  return u.lattice().site_weight() * u.values().dot(v.values());
}

std::complex<double> inner_product(const ComplexField& u, const ComplexField& v) {
  if (u.lattice() != v.lattice()) throw ConfigError("inner_product: lattice mismatch");
  return u.lattice().site_weight() * (u.values().array() * v.values().array()).sum();
}

double norm_sq(const Field& u) { return inner_product(u, u); }

double sup_norm(const Field& u) { return u.values().size() ? u.values().cwiseAbs().maxCoeff() : 0.0; }

template <class F>
static F forward_derivative_impl(const F& f, int mu) {
  const TorusLattice& lat = f.lattice();
  if (mu < 0 || mu >= lat.d()) throw ConfigError("derivative direction out of range");
  F out(lat);
  double inv = 1.0 / lat.spacing();
  for (Index i = 0; i < lat.size(); ++i) out[i] = (f[lat.shift(i, mu, 1)] - f[i]) * inv;
  return out;
}

Field forward_derivative(const Field& f, int mu) { return forward_derivative_impl(f, mu); }
ComplexField forward_derivative(const ComplexField& f, int mu) { return forward_derivative_impl(f, mu); }

Field derivative_adjoint(const Field& g, int mu) {
  const TorusLattice& lat = g.lattice();
  Field out(lat);
  double inv = 1.0 / lat.spacing();
  for (Index i = 0; i < lat.size(); ++i) out[i] = (g[lat.shift(i, mu, -1)] - g[i]) * inv;
  return out;
}

Field laplacian(const Field& f) {
  const TorusLattice& lat = f.lattice();
  Field out(lat);
  double inv2 = 1.0 / (lat.spacing() * lat.spacing());
  for (Index i = 0; i < lat.size(); ++i) {
    double s = 0.0;
    for (int mu = 0; mu < lat.d(); ++mu) s += f[lat.shift(i, mu, 1)] + f[lat.shift(i, mu, -1)] - 2.0 * f[i];
    out[i] = s * inv2;
  }
  return out;
}

Matrix derivative_matrix(const TorusLattice& lat, int mu) {
  Matrix D = Matrix::Zero(lat.size(), lat.size());
  double inv = 1.0 / lat.spacing();
  for (Index i = 0; i < lat.size(); ++i) {
    D(i, lat.shift(i, mu, 1)) += inv;
    D(i, i) -= inv;
  }
  return D;
}

Matrix laplacian_matrix(const TorusLattice& lat) { return neumann_laplacian(Region::whole(lat)); }

Matrix neumann_laplacian(const Region& region) {
  const TorusLattice& lat = region.lattice();
  if (region.size() == 0) throw ConfigError("neumann_laplacian: empty region");
  Matrix A = Matrix::Zero(lat.size(), lat.size());
  double inv2 = 1.0 / (lat.spacing() * lat.spacing());
  for (Index x : region.sites()) {
    for (int mu = 0; mu < lat.d(); ++mu) {
      Index y = lat.shift(x, mu, 1);
      if (!region.contains(y) || y == x) continue;
      A(x, x) -= inv2;
      A(y, y) -= inv2;
      A(x, y) += inv2;
      A(y, x) += inv2;
    }
  }
  return A;
}

Matrix neumann_laplacian_local(const Region& region) {
  const TorusLattice& lat = region.lattice();
  if (region.size() == 0) throw ConfigError("neumann_laplacian: empty region");
  Matrix A = Matrix::Zero(region.size(), region.size());
  double inv2 = 1.0 / (lat.spacing() * lat.spacing());
  for (Index x : region.sites()) {
    Index a = region.local_index(x);
    for (int mu = 0; mu < lat.d(); ++mu) {
      Index y = lat.shift(x, mu, 1);
      if (!region.contains(y) || y == x) continue;
      Index b = region.local_index(y);
      A(a, a) -= inv2;
      A(b, b) -= inv2;
      A(a, b) += inv2;
      A(b, a) += inv2;
    }
  }
  return A;
}

Field scale_field(const Field& f, ScaleDirection dir) {
  const TorusLattice& lat = f.lattice();
  double s = field_dimension(lat.d());
  double factor = std::pow(static_cast<double>(lat.L()), -s);
  if (dir == ScaleDirection::up) return Field(lat.scaled_up(), f.values() * factor);
  return Field(lat.scaled_down(), f.values() / factor);
}

}  // namespace blockrg
