#include "helpers.hpp"
#include "hinf/matrix_equations.hpp"

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

using namespace hinf;

namespace {

Mat<double> kron(const Mat<double>& a, const Mat<double>& b) {
  Mat<double> k(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

// int_0^inf exp(M^T t) Q exp(M t) dt by composite 5-point Gauss-Legendre,
// truncated once ||exp(M t)|| < 1e-14.
Mat<double> quadrature_gramian(const Mat<double>& M, const Mat<double>& Q) {
  static const double x[] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                             0.9061798459386640};
  static const double w[] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                             0.2369268850561891};
  const double rate = -Eigen::EigenSolver<Mat<double>>(M, false).eigenvalues().real().maxCoeff();
  const double h = std::min(0.05, 0.2 / std::max(1.0, M.norm()));
  Mat<double> X = Mat<double>::Zero(M.rows(), M.cols());
  for (double a = 0.0;; a += h) {
    for (int k = 0; k < 5; ++k) {
      const Mat<double> E = (M * (a + h * (x[k] + 1) / 2)).exp();
      X += w[k] * h / 2 * E.transpose() * Q * E;
    }
    if (a * rate > 40 && (M * a).exp().norm() < 1e-14) break;
  }
  return X;
}

}  // namespace

TEST_SUITE("matrix_equations") {
  TEST_CASE("scalar Lyapunov gives f^2 / (2z)") {
    const double z = 3.0, f = 0.7;
    const auto X = solve_lyapunov<double>(Mat<double>::Constant(1, 1, -z), Mat<double>::Constant(1, 1, f * f));
    CHECK(X(0, 0) == doctest::Approx(f * f / (2 * z)).epsilon(1e-14));
  }

  TEST_CASE("zero right-hand side gives zero") {
    std::mt19937_64 rng(1);
    const auto X = solve_lyapunov<double>(test::random_hurwitz(rng, 3), Mat<double>::Zero(3, 3));
    CHECK(X.norm() == 0.0);
  }

  TEST_CASE("degree-2 chain reproduces the printed Gramian") {
    const double z = 1.7;
    Mat<double> L(2, 2);
    L << z, -1, 0, z;
    Vec<double> f(2);
    f << 1, 0;
    const auto F = solve_lyapunov<double>(-L, f * f.transpose());
    CHECK(F(0, 0) == doctest::Approx(1 / (2 * z)).epsilon(1e-12));
    CHECK(F(0, 1) == doctest::Approx(1 / (4 * z * z)).epsilon(1e-12));
    CHECK(F(1, 1) == doctest::Approx(1 / (4 * z * z * z)).epsilon(1e-12));
  }

  TEST_CASE("Lyapunov residual, symmetry and linearity") {
    std::mt19937_64 rng(2);
    for (int n = 1; n <= 6; ++n) {
      const Mat<double> M = test::random_hurwitz(rng, n);
      const Mat<double> Q1 = test::random_spd(rng, n), Q2 = test::random_spd(rng, n);
      const auto X1 = solve_lyapunov(M, Q1), X2 = solve_lyapunov(M, Q2);
      CHECK((M.transpose() * X1 + X1 * M + Q1).norm() <= 1e-10 * Q1.norm() * std::max(1.0, M.norm()));
      CHECK((X1 - X1.transpose()).norm() <= 1e-12 * X1.norm());
      const auto X12 = solve_lyapunov<double>(M, Q1 + Q2);
      CHECK((X12 - X1 - X2).norm() <= 1e-10 * X12.norm());
    }
  }

  TEST_CASE("Lyapunov agrees with quadrature of the integral form") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 12; ++trial) {
      const int n = 1 + trial % 3;
      const Mat<double> M = test::random_hurwitz(rng, n);
      const Mat<double> f = test::random_matrix(rng, n, 1);
      const Mat<double> Q = f * f.transpose();
      const auto X = solve_lyapunov(M, Q);
      const auto Xq = quadrature_gramian(M, Q);
      CHECK((X - Xq).norm() <= 1e-6 * std::max(1.0, X.norm()));
    }
  }

  TEST_CASE("Lyapunov rejects unstable and near-axis M") {
    CHECK_THROWS_AS(solve_lyapunov<double>(Mat<double>::Constant(1, 1, 1.0), Mat<double>::Ones(1, 1)), Error);
    try {
      solve_lyapunov<double>(Mat<double>::Constant(1, 1, -1e-12), Mat<double>::Ones(1, 1));
      FAIL("expected IllConditioned");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::IllConditioned);
    }
  }

  TEST_CASE("Sylvester examples") {
    const auto X = solve_sylvester<double>(Mat<double>::Ones(1, 1), Mat<double>::Ones(1, 1),
                                           Mat<double>::Constant(1, 1, 4.0));
    CHECK(X(0, 0) == doctest::Approx(2.0));
    std::mt19937_64 rng(6);
    const Mat<double> A = test::random_hurwitz(rng, 3), B = test::random_hurwitz(rng, 3);
    CHECK(solve_sylvester<double>(A, B, Mat<double>::Zero(3, 3)).norm() == 0.0);
    CHECK_THROWS_AS(solve_sylvester<double>(Mat<double>::Ones(1, 1), -Mat<double>::Ones(1, 1), Mat<double>::Ones(1, 1)),
                    Error);
  }

  TEST_CASE("Sylvester agrees with the Kronecker solve") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
      const int m = 1 + trial % 4, n = 1 + (trial / 4) % 4;
      const Mat<double> A = test::random_matrix(rng, m, m), B = test::random_matrix(rng, n, n) + 4 * Mat<double>::Identity(n, n);
      const Mat<double> C = test::random_matrix(rng, m, n);
      const Mat<double> K = kron(Mat<double>::Identity(n, n), A) + kron(B.transpose(), Mat<double>::Identity(m, m));
      const Vec<double> vc = Eigen::Map<const Vec<double>>(C.data(), m * n);
      const Vec<double> vx = K.fullPivLu().solve(vc);
      const Mat<double> Xk = Eigen::Map<const Mat<double>>(vx.data(), m, n);
      const Mat<double> X = solve_sylvester(A, B, C);
      Eigen::JacobiSVD<Mat<double>> svd(K);
      const double cond = svd.singularValues()(0) / svd.singularValues()(m * n - 1);
      CHECK((X - Xk).norm() <= 1e-12 * cond * std::max(1.0, Xk.norm()));
      CHECK((A * X + X * B - C).norm() <= 1e-10 * std::max(1.0, C.norm()) * std::max(1.0, X.norm()));
    }
  }

  TEST_CASE("Schur block swaps preserve the similarity") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      const Mat<double> A = test::random_matrix(rng, 5, 5);
      Eigen::RealSchur<Mat<double>> rs(A);
      Mat<double> T = rs.matrixT(), U = rs.matrixU();
      const auto blocks = schur_blocks(T);
      if (blocks.size() < 2) continue;
      const auto [k, p1] = blocks[0];
      const int p2 = blocks[1].second;
      swap_schur_blocks(T, U, k, p1, p2);
      CHECK((U * T * U.transpose() - A).norm() < 1e-10 * A.norm());
      CHECK((U.transpose() * U - Mat<double>::Identity(5, 5)).norm() < 1e-12);
    }
  }

  TEST_CASE("symmetric square roots") {
    CHECK((sym_sqrt<double>(Mat<double>::Identity(3, 3)) - Mat<double>::Identity(3, 3)).norm() < 1e-15);
    Mat<double> D = Mat<double>::Zero(2, 2);
    D.diagonal() << 4, 9;
    const auto R = sym_sqrt(D);
    CHECK(R(0, 0) == doctest::Approx(2.0));
    CHECK(R(1, 1) == doctest::Approx(3.0));
    std::mt19937_64 rng(10);
    for (int i = 0; i < 10; ++i) {
      const Mat<double> P = test::random_spd(rng, 4);
      const auto S = sym_sqrt(P);
      CHECK((S * S - P).norm() <= 1e-10 * P.norm());
      const auto Si = inv_sqrt(P);
      CHECK((Si * P * Si - Mat<double>::Identity(4, 4)).norm() <= 1e-9);
    }
    Mat<double> bad = Mat<double>::Zero(2, 2);
    bad.diagonal() << 1, -1;
    CHECK_THROWS_AS(sym_sqrt(bad), Error);
    Mat<double> singular = Mat<double>::Zero(2, 2);
    singular(0, 0) = 1;
    CHECK_THROWS_AS(inv_sqrt(singular), Error);
  }
}
