#include <doctest.h>

#include <random>

#include "nimpanel/numerics.hpp"

using namespace nim;

TEST_CASE("least squares on an identity design returns y") {
  Matrix X = Matrix::Identity(4, 4);
  Vector y(4);
  y << 3.0, -1.0, 0.5, 2.25;
  auto fit = solve_least_squares(X, y);
  CHECK((fit.beta - y).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fit.residuals.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("duplicated column raises a singular-design error") {
  Matrix X(5, 2);
  for (int i = 0; i < 5; ++i) X(i, 0) = X(i, 1) = i + 1.0;
  Vector y = Vector::Ones(5);
  CHECK_THROWS_AS(solve_least_squares(X, y), SingularDesignError);
}

TEST_CASE("3x2 system matches hand normal-equations arithmetic") {
  // X = [1 0; 1 1; 1 2], y = (1, 2, 4).
  // X'X = [3 3; 3 5], X'y = (7, 10), inv = [5 -3; -3 3]/6.
  // beta = ((35 - 30)/6, (-21 + 30)/6) = (5/6, 3/2).
  Matrix X(3, 2);
  X << 1, 0, 1, 1, 1, 2;
  Vector y(3);
  y << 1, 2, 4;
  auto fit = solve_least_squares(X, y);
  CHECK(fit.beta(0) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(fit.beta(1) == doctest::Approx(1.5).epsilon(1e-12));
  // Residuals orthogonal to the columns of X.
  CHECK(std::abs(fit.residuals.dot(X.col(0))) < 1e-8);
  CHECK(std::abs(fit.residuals.dot(X.col(1))) < 1e-8);
}

TEST_CASE("exactly determined consistent systems are reproduced exactly") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 20; ++rep) {
    Matrix X(6, 6);
    for (int i = 0; i < 36; ++i) X(i / 6, i % 6) = z(rng);
    Vector beta_true(6);
    for (int i = 0; i < 6; ++i) beta_true(i) = z(rng);
    Vector y = X * beta_true;
    auto fit = solve_least_squares(X, y);
    CHECK((fit.beta - beta_true).norm() / beta_true.norm() < 1e-10);
  }
}

TEST_CASE("generalized inverse of an invertible matrix is the inverse") {
  Matrix A(3, 3);
  A << 4, 1, 0, 1, 3, -1, 0, -1, 2;
  Matrix Ainv = generalized_inverse(A);
  CHECK((A * Ainv - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("generalized inverse of zero is zero") {
  Matrix Z = Matrix::Zero(4, 4);
  int rank = -1;
  CHECK(generalized_inverse(Z, &rank).cwiseAbs().maxCoeff() == 0.0);
  CHECK(rank == 0);
}

TEST_CASE("rank-1 projector is its own pseudo-inverse") {
  Vector v(3);
  v << 2.0, -1.0, 2.0;
  v.normalize();
  Matrix A = v * v.transpose();
  Matrix Ap = generalized_inverse(A);
  CHECK((Ap - A).cwiseAbs().maxCoeff() < 1e-10);
  // Penrose conditions by direct multiplication.
  CHECK((A * Ap * A - A).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((Ap * A * Ap - Ap).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(((A * Ap) - (A * Ap).transpose()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(((Ap * A) - (Ap * A).transpose()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("penrose conditions hold for random rank-deficient symmetric matrices") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 10; ++rep) {
    Matrix B(5, 3);
    for (int i = 0; i < 15; ++i) B(i / 3, i % 3) = z(rng);
    Matrix A = B * B.transpose();  // rank 3 of 5
    Matrix Ap = generalized_inverse(A);
    const double scale = A.cwiseAbs().maxCoeff();
    CHECK((A * Ap * A - A).cwiseAbs().maxCoeff() < 1e-8 * scale);
    CHECK((Ap * A * Ap - Ap).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, scale));
    CHECK(((A * Ap) - (A * Ap).transpose()).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("generalized inverse rejects asymmetric input") {
  Matrix A(2, 2);
  A << 1, 2, 3, 4;
  CHECK_THROWS(generalized_inverse(A));
}

TEST_CASE("quadratic form basics") {
  Matrix W(2, 2);
  W << 2, 1, 1, 3;
  Vector v(2);
  v << 1, 2;
  CHECK(quadratic_form(v, W) == doctest::Approx(18.0));  // 2 + 2 + 2 + 12
  CHECK(quadratic_form(Vector::Zero(2), W) == 0.0);
  Vector u(3);
  u << 1, -2, 2;
  CHECK(quadratic_form(u, Matrix::Identity(3, 3)) == doctest::Approx(9.0));
  CHECK_THROWS(quadratic_form(u, W));
}

TEST_CASE("quadratic form is nonnegative for PSD matrices") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 50; ++rep) {
    Matrix B(4, 2);
    for (int i = 0; i < 8; ++i) B(i / 2, i % 2) = z(rng);
    Matrix W = B * B.transpose();
    Vector v(4);
    for (int i = 0; i < 4; ++i) v(i) = z(rng);
    CHECK(quadratic_form(v, W) >= -1e-12);
  }
}
