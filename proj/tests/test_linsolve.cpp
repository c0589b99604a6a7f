#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mgfsi/linsolve.hpp"

#include <random>

using namespace mgfsi;

namespace {

SparseMatrix dense_to_sparse(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  std::vector<std::vector<int>> rows(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) rows[i].push_back(j);
  SparseMatrix S(n, rows);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S.set(i, j, A(i, j));
  return S;
}

// Dense Gaussian elimination with partial pivoting (independent oracle).
Vector dense_gauss(Eigen::MatrixXd A, Vector b) {
  const int n = static_cast<int>(A.rows());
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(A(i, k)) > std::abs(A(piv, k))) piv = i;
    A.row(k).swap(A.row(piv));
    std::swap(b[k], b[piv]);
    for (int i = k + 1; i < n; ++i) {
      const double f = A(i, k) / A(k, k);
      A.row(i) -= f * A.row(k);
      b[i] -= f * b[k];
    }
  }
  Vector x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= A(i, j) * x[j];
    x[i] = s / A(i, i);
  }
  return x;
}

}  // namespace

TEST_CASE("identity solve") {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(5, 5);
  Vector b(5);
  b << 1, -2, 3, 0.5, 4;
  Vector x = solve_sparse(dense_to_sparse(I), b);
  CHECK((x - b).norm() < 1e-14);
}

TEST_CASE("random SPD system matches the dense elimination oracle") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(-1, 1);
  Eigen::MatrixXd M(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) M(i, j) = d(rng);
  Eigen::MatrixXd A = M * M.transpose() + 8.0 * Eigen::MatrixXd::Identity(8, 8);
  Vector b(8);
  for (int i = 0; i < 8; ++i) b[i] = d(rng);
  Vector x = solve_sparse(dense_to_sparse(A), b);
  Vector y = dense_gauss(A, b);
  CHECK((x - y).norm() < 1e-10);
  CHECK((dense_to_sparse(A).multiply(x) - b).norm() <= 1e-10 * b.norm());
}

TEST_CASE("singular matrix reports an error") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
  A(0, 0) = 1.0;
  A(1, 1) = 1.0;  // row/col 2 empty
  Vector b = Vector::Ones(3);
  CHECK_THROWS(solve_sparse(dense_to_sparse(A), b));
}

TEST_CASE("newton on a linear system converges in one iteration") {
  Eigen::MatrixXd A(3, 3);
  A << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  Vector b(3);
  b << 1, 2, 3;
  auto residual = [&](const Vector& x) { return Vector(b - A * x); };
  auto jacobian = [&](const Vector&) { return dense_to_sparse(A); };
  Vector x = Vector::Zero(3);
  NewtonLog log = newton_solve(residual, jacobian, x, NewtonSettings{});
  CHECK(log.converged);
  CHECK(log.iterations == 1);
  CHECK((A * x - b).norm() < 1e-12);
}

TEST_CASE("newton on x^2 - 2: quadratic convergence to sqrt(2)") {
  auto residual = [](const Vector& x) {
    Vector r(1);
    r[0] = -(x[0] * x[0] - 2.0);
    return r;
  };
  auto jacobian = [](const Vector& x) {
    SparseMatrix J(1, {{0}});
    J.set(0, 0, 2.0 * x[0]);
    return J;
  };
  Vector x(1);
  x[0] = 1.5;
  NewtonSettings st;
  st.abs_tol = 1e-14;
  NewtonLog log = newton_solve(residual, jacobian, x, st);
  CHECK(log.converged);
  CHECK(x[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  // Hand iteration: 1.5 -> 17/12 -> 577/408.
  // Convergence order from the error sequence is at least ~2.
  std::vector<double> err;
  double xi = 1.5;
  for (int i = 0; i < 4; ++i) {
    err.push_back(std::abs(xi - std::sqrt(2.0)));
    xi = 0.5 * (xi + 2.0 / xi);
  }
  const double order1 = std::log(err[2] / err[1]) / std::log(err[1] / err[0]);
  CHECK(order1 >= 1.8);
  // The solver's own residual history contracts at least quadratically.
  REQUIRE(log.residual_norms.size() >= 3);
  const double r0 = log.residual_norms[0];
  const double r1 = log.residual_norms[1];
  const double r2 = log.residual_norms[2];
  const double order = std::log(r2 / r1) / std::log(r1 / r0);
  CHECK(order >= 1.8);
}

TEST_CASE("newton with max_iter = 0 is an error") {
  auto residual = [](const Vector& x) { return Vector(-x); };
  auto jacobian = [](const Vector&) {
    SparseMatrix J(1, {{0}});
    J.set(0, 0, 1.0);
    return J;
  };
  Vector x = Vector::Ones(1);
  NewtonSettings st;
  st.max_iter = 0;
  CHECK_THROWS(newton_solve(residual, jacobian, x, st));
}

TEST_CASE("condensation enforces constraints") {
  // 4-dof system; dof 3 slaved to 0.5*(dof0 + dof1), dof 2 Dirichlet = 2.
  Eigen::MatrixXd A(4, 4);
  A << 4, 1, 0, 1, 1, 5, 1, 0, 0, 1, 6, 1, 1, 0, 1, 7;
  Vector b(4);
  b << 1, 1, 1, 1;
  const Vector b_orig = b;
  SparseMatrix S = dense_to_sparse(A);
  ConstraintSet c;
  c.add_line(3, {{0, 0.5}, {1, 0.5}}, 0.0);
  c.add_line(2, {}, 2.0);
  c.close();
  condense(S, b, c);
  Vector x = solve_sparse(S, b);
  CHECK(x[2] == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(x[3] == doctest::Approx(0.5 * (x[0] + x[1])).epsilon(1e-13));
  // Free equations hold in the distributed sense:
  // (row_i + 0.5 row_3)(x) = b_i + 0.5 b_3 for i = 0, 1.
  const Vector Ax = A * x;
  CHECK(Ax[0] + 0.5 * Ax[3] ==
        doctest::Approx(b_orig[0] + 0.5 * b_orig[3]).epsilon(1e-12));
  CHECK(Ax[1] + 0.5 * Ax[3] ==
        doctest::Approx(b_orig[1] + 0.5 * b_orig[3]).epsilon(1e-12));
}
