#include "rismec/numerics.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace rismec {

double hermitian_residual(const CMatrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  const double scale = std::max(1.0, a.norm());
  return (a - a.adjoint()).norm() / scale;
}

bool is_hermitian(const CMatrix& a, double tol) {
  return a.rows() == a.cols() && hermitian_residual(a) <= tol;
}

std::vector<EigenPair> hermitian_eig(const CMatrix& a) {
  if (!is_hermitian(a)) {
    throw std::invalid_argument("hermitian_eig: input is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("hermitian_eig: eigensolver failed");
  }
  const int n = static_cast<int>(a.rows());
  std::vector<EigenPair> pairs(n);
  // Eigen sorts ascending; emit descending so index 0 is the leading pair.
  for (int i = 0; i < n; ++i) {
    pairs[i].value = es.eigenvalues()(n - 1 - i);
    pairs[i].vector = es.eigenvectors().col(n - 1 - i);
  }
  return pairs;
}

EigenPair generalized_max_eigvec(const CMatrix& a, const CMatrix& b) {
  if (!is_hermitian(a, 1e-10) || !is_hermitian(b, 1e-10)) {
    throw std::invalid_argument("generalized_max_eigvec: inputs must be Hermitian");
  }
  auto b_pairs = hermitian_eig(b);
  const double b_max = b_pairs.front().value;
  const double b_min = b_pairs.back().value;
  if (b_min <= 0.0 || b_min < 1e-14 * std::max(1.0, b_max)) {
    throw std::invalid_argument(
        "generalized_max_eigvec: B is singular (degenerate interference-plus-noise matrix)");
  }
  const int n = static_cast<int>(b.rows());
  CMatrix b_inv_sqrt = CMatrix::Zero(n, n);
  for (const auto& p : b_pairs) {
    b_inv_sqrt += (1.0 / std::sqrt(p.value)) * p.vector * p.vector.adjoint();
  }
  CMatrix whitened = b_inv_sqrt * a * b_inv_sqrt;
  auto pairs = hermitian_eig(0.5 * (whitened + whitened.adjoint()));
  EigenPair out;
  out.value = pairs.front().value;
  out.vector = b_inv_sqrt * pairs.front().vector;
  out.vector.normalize();
  return out;
}

CMatrix project_psd_unit_diag(const CMatrix& a, double tol, int max_alternations) {
  if (!is_hermitian(a, 1e-9)) {
    throw std::invalid_argument("project_psd_unit_diag: input is not Hermitian");
  }
  CMatrix x = 0.5 * (a + a.adjoint());
  double eig_violation = 0.0;
  double diag_violation = 0.0;
  for (int it = 0; it < max_alternations; ++it) {
    // PSD part: clip negative eigenvalues.
    Eigen::SelfAdjointEigenSolver<CMatrix> es(x);
    eig_violation = std::max(0.0, -es.eigenvalues().minCoeff());
    RVector clipped = es.eigenvalues().cwiseMax(0.0);
    x = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
    x = 0.5 * (x + x.adjoint());
    // Unit diagonal part.
    diag_violation = 0.0;
    for (int k = 0; k < x.rows(); ++k) {
      diag_violation = std::max(diag_violation, std::abs(x(k, k) - Complex(1.0, 0.0)));
      x(k, k) = Complex(1.0, 0.0);
    }
    if (eig_violation <= tol && diag_violation <= tol) {
      return x;
    }
  }
  // Final check: the diagonal was reset last, so only the PSD residual can
  // still be out of tolerance.
  Eigen::SelfAdjointEigenSolver<CMatrix> es(x);
  eig_violation = std::max(0.0, -es.eigenvalues().minCoeff());
  if (eig_violation <= tol) return x;
  std::ostringstream msg;
  msg << "project_psd_unit_diag: no convergence after " << max_alternations
      << " alternations (eig residual " << eig_violation << ", diag residual "
      << diag_violation << ")";
  throw std::runtime_error(msg.str());
}

CMatrix spectral_norm_subgradient(const CMatrix& a) {
  auto pairs = hermitian_eig(a);
  const CVector& z1 = pairs.front().vector;
  return z1 * z1.adjoint();
}

double spectral_norm_psd(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  return es.eigenvalues().maxCoeff();
}

double herm_inner(const CMatrix& x1, const CMatrix& x2) {
  return (x1.adjoint() * x2).trace().real();
}

}  // namespace rismec
