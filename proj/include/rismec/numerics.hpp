#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace rismec {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// One eigenvalue together with its unit-norm eigenvector.
struct EigenPair {
  double value = 0.0;
  CVector vector;
};

/// Relative Hermitian deviation ||A - A^H|| / max(1, ||A||), Frobenius.
double hermitian_residual(const CMatrix& a);

bool is_hermitian(const CMatrix& a, double tol = 1e-12);

/// Eigendecomposition of a Hermitian matrix, pairs sorted by descending
/// eigenvalue. Ties are broken by the order the backend returns, i.e. the
/// first eigenvector for a repeated leading eigenvalue.
/// Throws std::invalid_argument if A is not Hermitian.
std::vector<EigenPair> hermitian_eig(const CMatrix& a);

/// Leading eigenpair of B^-1 A for Hermitian PSD A and Hermitian positive
/// definite B, computed through symmetric whitening. The returned vector is
/// unit norm. Throws std::invalid_argument when B is singular (to working
/// precision) or the inputs are not Hermitian.
EigenPair generalized_max_eigvec(const CMatrix& a, const CMatrix& b);

/// Nearest-point style feasibility map onto {PSD, unit diagonal} by
/// alternating eigenvalue clipping and diagonal reset. Stops when both the
/// minimum eigenvalue and the worst diagonal deviation are below `tol`.
/// Throws std::runtime_error with the residuals if `max_alternations` is hit.
CMatrix project_psd_unit_diag(const CMatrix& a, double tol = 1e-9,
                              int max_alternations = 200);

/// Subgradient z1 z1^H of the spectral norm at a Hermitian PSD point, with
/// z1 the leading eigenvector (first one on ties).
CMatrix spectral_norm_subgradient(const CMatrix& a);

/// Spectral norm (largest eigenvalue) of a Hermitian PSD matrix.
double spectral_norm_psd(const CMatrix& a);

/// <X1, X2> = Re tr(X1^H X2).
double herm_inner(const CMatrix& x1, const CMatrix& x2);

}  // namespace rismec
