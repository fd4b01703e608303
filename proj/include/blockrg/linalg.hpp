#pragma once

#include "blockrg/lattice.hpp"

namespace blockrg {

// Inverse of a symmetric positive definite matrix via Cholesky; throws
// NumericalError if the factorization fails.
Matrix spd_inverse(const Matrix& A);
double spd_logdet(const Matrix& A);
bool is_spd(const Matrix& A);

// Symmetric PSD square root by eigendecomposition.
Matrix sym_sqrt(const Matrix& A);
Vector sym_eigenvalues(const Matrix& A);
double min_eigenvalue(const Matrix& A);

double max_abs(const Matrix& A);
double max_abs_diff(const Matrix& A, const Matrix& B);
double operator_norm(const Matrix& A);
double operator_norm(const CMatrix& A);
Matrix symmetrized(const Matrix& A);

}  // namespace blockrg
