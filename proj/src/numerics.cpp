#include "nimpanel/numerics.hpp"

#include <cmath>
#include <sstream>

namespace nim {

LeastSquaresFit solve_least_squares(const Matrix& X, const Vector& y) {
  const auto n = X.rows();
  const auto k = X.cols();
  if (n < k) throw std::invalid_argument("least squares: fewer rows than columns");
  if (y.size() != n) throw std::invalid_argument("least squares: y length mismatch");

  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  const Vector diag = qr.matrixR().diagonal().cwiseAbs();
  const double dmax = diag.maxCoeff();
  const double dmin = diag.minCoeff();
  if (dmax <= 0.0 || dmin / dmax < 1e-12) {
    SingularDesignError err("singular design: condition estimate above 1e12");
    // Columns pivoted past the numerical rank are the dependent ones.
    const auto perm = qr.colsPermutation().indices();
    for (int j = 0; j < k; ++j) {
      if (diag(j) < dmax * 1e-12) err.offending_columns.push_back(perm(j));
    }
    throw err;
  }

  LeastSquaresFit fit;
  fit.beta = qr.solve(y);
  fit.residuals = y - X * fit.beta;
  const Matrix xtx = X.transpose() * X;
  fit.xtx_inverse = xtx.ldlt().solve(Matrix::Identity(k, k));
  return fit;
}

Matrix generalized_inverse(const Matrix& A, int* rank_out) {
  if (A.rows() != A.cols()) throw std::invalid_argument("generalized_inverse: matrix not square");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("generalized_inverse: matrix not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (A + A.transpose()));
  const Vector& lam = eig.eigenvalues();
  const Matrix& V = eig.eigenvectors();
  const double cutoff = lam.cwiseAbs().maxCoeff() * A.rows() * 1e-12;

  Vector inv_lam = Vector::Zero(lam.size());
  int rank = 0;
  for (int i = 0; i < lam.size(); ++i) {
    if (std::abs(lam(i)) > cutoff) {
      inv_lam(i) = 1.0 / lam(i);
      ++rank;
    }
  }
  if (rank_out) *rank_out = rank;
  return V * inv_lam.asDiagonal() * V.transpose();
}

double quadratic_form(const Vector& v, const Matrix& W) {
  if (W.rows() != v.size() || W.cols() != v.size())
    throw std::invalid_argument("quadratic_form: dimension mismatch");
  return v.dot(W * v);
}

}  // namespace nim
