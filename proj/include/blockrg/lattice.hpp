#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace blockrg {

using Index = std::int64_t;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Coord = std::array<Index, 3>;

Index ipow(Index base, int e);
double dpow(double base, int e);

// Periodic d-dimensional lattice of side^d sites with spacing L^spacing_exp.
// The level-k lattice of the paper has spacing_exp = -k.
class TorusLattice {
 public:
  TorusLattice(int d, int L, int spacing_exp, Index side);

  // Spacing L^{-k} inside a torus of continuum side L^{side_exp}.
  static TorusLattice level(int d, int L, int side_exp, int k);

  int d() const { return d_; }
  int L() const { return L_; }
  int spacing_exp() const { return spacing_exp_; }
  Index side() const { return side_; }
  Index size() const { return size_; }
  double spacing() const { return spacing_; }
  double site_weight() const { return weight_; }
  double volume() const { return weight_ * static_cast<double>(size_); }
  double continuum_side() const { return spacing_ * static_cast<double>(side_); }

  Coord coords(Index i) const;
  Index index(const Coord& x) const;  // wraps every component
  Index shift(Index i, int mu, Index step) const;
  std::vector<Index> neighbors(Index i) const;

  // Periodic minimum of |x_mu - y_mu| in lattice units, and the sup over mu.
  Index axis_distance(Index i, Index j, int mu) const;
  Index int_distance(Index i, Index j) const;
  double distance(Index i, Index j) const { return spacing_ * static_cast<double>(int_distance(i, j)); }

  // Spacing times L^j, side divided by L^j.
  TorusLattice coarsened(int j) const;
  // Same site count, spacing times L (target of f -> f_L).
  TorusLattice scaled_up() const;
  TorusLattice scaled_down() const;

  bool operator==(const TorusLattice& o) const {
    return d_ == o.d_ && L_ == o.L_ && spacing_exp_ == o.spacing_exp_ && side_ == o.side_;
  }
  bool operator!=(const TorusLattice& o) const { return !(*this == o); }

 private:
  int d_;
  int L_;
  int spacing_exp_;
  Index side_;
  Index size_;
  double spacing_;
  double weight_;
};

// Scaling dimension of the field: f_L(x) = L^{-s} f(x/L) with s = (d-2)/2.
double field_dimension(int d);

template <class Scalar>
class BasicField {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit BasicField(const TorusLattice& lat) : lat_(lat), v_(Vec::Zero(lat.size())) {}
  BasicField(const TorusLattice& lat, Vec values);
  static BasicField constant(const TorusLattice& lat, Scalar c) {
    return BasicField(lat, Vec::Constant(lat.size(), c));
  }

  const TorusLattice& lattice() const { return lat_; }
  const Vec& values() const { return v_; }
  Vec& values() { return v_; }
  Index size() const { return lat_.size(); }
  Scalar operator[](Index i) const { return v_[i]; }
  Scalar& operator[](Index i) { return v_[i]; }

  BasicField operator+(const BasicField& o) const;
  BasicField operator-(const BasicField& o) const;
  BasicField operator-() const { return BasicField(lat_, -v_); }
  BasicField operator*(Scalar c) const { return BasicField(lat_, v_ * c); }

 private:
  TorusLattice lat_;
  Vec v_;
};

using Field = BasicField<double>;
using ComplexField = BasicField<std::complex<double>>;

// Sorted site subset of a lattice.
class Region {
 public:
  Region(const TorusLattice& lat, std::vector<Index> sites);
  static Region whole(const TorusLattice& lat);

  const TorusLattice& lattice() const { return lat_; }
  const std::vector<Index>& sites() const { return sites_; }
  Index size() const { return static_cast<Index>(sites_.size()); }
  bool contains(Index i) const { return member_[static_cast<std::size_t>(i)] != 0; }
  // Position of site i in sites(), or -1.
  Index local_index(Index i) const { return local_[static_cast<std::size_t>(i)]; }

 private:
  TorusLattice lat_;
  std::vector<Index> sites_;
  std::vector<char> member_;
  std::vector<Index> local_;
};

// <u, v> = spacing^d sum u v (bilinear).
double inner_product(const Field& u, const Field& v);
std::complex<double> inner_product(const ComplexField& u, const ComplexField& v);
double norm_sq(const Field& u);
double sup_norm(const Field& u);

Field forward_derivative(const Field& f, int mu);
ComplexField forward_derivative(const ComplexField& f, int mu);
// Adjoint of forward_derivative under the weighted inner product.
Field derivative_adjoint(const Field& g, int mu);
Field laplacian(const Field& f);

Matrix derivative_matrix(const TorusLattice& lat, int mu);
Matrix laplacian_matrix(const TorusLattice& lat);
// Neumann Laplacian: only bonds with both ends in the region. Full-size matrix,
// zero outside the region.
Matrix neumann_laplacian(const Region& region);
// The same operator as a |region| x |region| matrix in region order.
Matrix neumann_laplacian_local(const Region& region);

enum class ScaleDirection { up, down };
// up: f -> f_L on the lattice with spacing times L. down: inverse map.
Field scale_field(const Field& f, ScaleDirection dir);

}  // namespace blockrg
