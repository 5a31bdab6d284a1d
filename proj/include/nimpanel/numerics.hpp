#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace nim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thrown when a design matrix is numerically rank deficient.
struct SingularDesignError : std::runtime_error {
  explicit SingularDesignError(const std::string& msg) : std::runtime_error(msg) {}
  std::vector<int> offending_columns;
};

struct LeastSquaresFit {
  Vector beta;
  Vector residuals;
  Matrix xtx_inverse;  // (X'X)^{-1}, reused for covariance estimates
};

// QR-based least squares. Rejects designs whose condition estimate
// exceeds 1e12, naming the dependent columns where detectable.
LeastSquaresFit solve_least_squares(const Matrix& X, const Vector& y);

// Moore-Penrose pseudo-inverse of a symmetric matrix via eigendecomposition.
// Eigenvalues below max(|lambda|) * dim * 1e-12 are treated as zero.
// Returns the rank through `rank_out` when non-null.
Matrix generalized_inverse(const Matrix& A, int* rank_out = nullptr);

// v' W v
double quadratic_form(const Vector& v, const Matrix& W);

}  // namespace nim
