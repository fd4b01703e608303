#include "blockrg/linalg.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "blockrg/error.hpp"

namespace blockrg {

Matrix spd_inverse(const Matrix& A) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) throw NumericalError("operator is not positive definite");
  Matrix inv = llt.solve(Matrix::Identity(A.rows(), A.cols()));
  return symmetrized(inv);
}

double spd_logdet(const Matrix& A) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) throw NumericalError("operator is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

bool is_spd(const Matrix& A) {
  Eigen::LLT<Matrix> llt(A);
  return llt.info() == Eigen::Success;
}

Matrix sym_sqrt(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(A));
  Vector ev = es.eigenvalues();
  double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-12 * scale) throw NumericalError("sym_sqrt: indefinite matrix");
  Vector root = ev.cwiseMax(0.0).cwiseSqrt();
  return symmetrized(es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose());
}

Vector sym_eigenvalues(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(A), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eigenvalue(const Matrix& A) { return sym_eigenvalues(A).minCoeff(); }

double max_abs(const Matrix& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

double max_abs_diff(const Matrix& A, const Matrix& B) { return max_abs(A - B); }

double operator_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(A);
  return svd.singularValues()(0);
}

double operator_norm(const CMatrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::BDCSVD<CMatrix> svd(A);
  return svd.singularValues()(0);
}

Matrix symmetrized(const Matrix& A) { return 0.5 * (A + A.transpose()); }

}  // namespace blockrg
