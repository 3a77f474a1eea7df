#include "helpers.hpp"

#include <doctest.h>

using namespace hinf;
using hinf::test::C;

namespace {

Realization<double> scalar(double a, double b, double c, double d) {
  return {Mat<double>::Constant(1, 1, a), Vec<double>::Constant(1, b), Vec<double>::Constant(1, c), d};
}

Realization<double> random_realization(std::mt19937_64& rng, int n, double d) {
  return {test::random_matrix(rng, n, n), test::random_matrix(rng, n, 1), test::random_matrix(rng, n, 1), d};
}

// Finite generalized eigenvalues of the Rosenbrock pencil by QZ.
std::vector<C> qz_zeros(const Realization<double>& r) {
  const int n = r.n();
  Mat<double> M(n + 1, n + 1), N = Mat<double>::Zero(n + 1, n + 1);
  M << r.A, r.b, r.c.transpose(), r.d;
  N.topLeftCorner(n, n).setIdentity();
  Eigen::GeneralizedEigenSolver<Mat<double>> ges(M, N, false);
  std::vector<C> out;
  const double scale = std::max(1.0, M.norm());
  for (int i = 0; i <= n; ++i)
    if (std::abs(ges.betas()(i)) > 1e-9 * scale) out.push_back(ges.alphas()(i) / ges.betas()(i));
  return out;
}

bool by_re_im(const C& a, const C& b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); }

std::vector<C> expand(const std::vector<InvariantZero<double>>& zs) {
  std::vector<C> out;
  for (const auto& z : zs)
    for (int k = 0; k < z.multiplicity; ++k) out.push_back(z.value);
  return out;
}

// Left identity of a real block: (S^T f) M = Lambda^T (S^T 0).
double block_residual(const Realization<double>& r, const NullBlock<double>& b) {
  if (b.k() == 0) return 0.0;
  return null_residual(r, b);
}

}  // namespace

TEST_SUITE("invariant_zeros") {
  TEST_CASE("worked examples") {
    const auto z = compute_zeros(scalar(-1, 1, -2, 1));
    REQUIRE(z.size() == 1);
    CHECK(std::abs(z[0].value - C(1.0)) < 1e-12);
    CHECK(z[0].klass == ZeroClass::Unstable);

    const auto none = compute_zeros(scalar(0, 1, 1, 0));
    CHECK(none.empty());
    CHECK(relative_degree(scalar(0, 1, 1, 0)) == 1);
  }

  TEST_CASE("scalar zero with d != 0 is A - b c / d") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 20; ++i) {
      const double a = nd(rng), b = nd(rng), c = nd(rng), d = nd(rng);
      const auto z = compute_zeros(scalar(a, b, c, d));
      REQUIRE(z.size() == 1);
      CHECK(std::abs(z[0].value.real() - (a - b * c / d)) < 1e-9 * std::max(1.0, std::abs(a - b * c / d)));
    }
  }

  TEST_CASE("relative degree") {
    CHECK(relative_degree(scalar(3, 1, 1, 1)) == 0);
    Mat<double> A(2, 2);
    A << 0, 1, 0, 0;
    Vec<double> b(2), c(2);
    b << 0, 1;
    c << 1, 0;
    CHECK(relative_degree(Realization<double>{A, b, c, 0.0}) == 2);
    CHECK_THROWS_AS(relative_degree(Realization<double>{A, b, Vec<double>::Zero(2), 0.0}), Error);
  }

  TEST_CASE("left null vector of the scalar example is proportional to (1, -1)") {
    const auto r = scalar(-1, 1, -2, 1);
    const auto zd = zero_data(r);
    REQUIRE(zd.plus.k() == 1);
    CHECK(std::abs(zd.plus.S(0, 0) + zd.plus.f(0)) < 1e-12);
    CHECK(block_residual(r, zd.plus) < 1e-14);
  }

  TEST_CASE("zeros agree with the QZ oracle and satisfy the count identity") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 60; ++trial) {
      const int n = 1 + trial % 5;
      const double d = trial % 3 == 0 ? 0.0 : 0.5 + trial % 2;
      const auto r = random_realization(rng, n, d);
      auto ours = expand(compute_zeros(r));
      auto oracle = qz_zeros(r);
      REQUIRE(ours.size() == oracle.size());
      std::sort(ours.begin(), ours.end(), by_re_im);
      std::sort(oracle.begin(), oracle.end(), by_re_im);
      for (std::size_t i = 0; i < ours.size(); ++i)
        CHECK(std::abs(ours[i] - oracle[i]) < 1e-7 * std::max(1.0, std::abs(oracle[i])));
      CHECK(static_cast<int>(ours.size()) + relative_degree(r) == n);
    }
  }

  TEST_CASE("null-vector residuals, nonzero f and vanishing transfer at zeros") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
      const int n = 2 + trial % 4;
      const auto r = random_realization(rng, n, trial % 2 ? 1.0 : 0.0);
      const auto zd = zero_data(r);
      CHECK(block_residual(r, zd.minus) < 1e-8);
      CHECK(block_residual(r, zd.plus) < 1e-8);
      CHECK(block_residual(r, zd.axis) < 1e-8);
      for (const auto& z : zd.zeros) {
        const auto ev = Eigen::EigenSolver<Mat<double>>(r.A, false).eigenvalues();
        bool pole = false;
        for (int i = 0; i < ev.size(); ++i) pole |= std::abs(ev(i) - z.value) < 1e-6;
        if (pole) continue;
        CHECK(std::abs(transfer_eval(r, z.value)) <= 1e-8 * (1 + std::abs(r.d)) * std::max(1.0, r.A.norm()));
      }
      // stabilizable (random data is controllable): unstable zeros have f != 0
      for (int j = 0; j < zd.plus.k(); ++j) CHECK(zd.plus.f.norm() > 1e-8);
      if (r.d != 0.0) {
        CHECK(zd.relative_degree == 0);
        CHECK(std::isfinite(zd.cond_S));
      }
    }
  }

  TEST_CASE("right null vectors: A T + b g^T = T Omega and c^T T + d g^T = 0") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 20; ++trial) {
      const auto r = random_realization(rng, 3, 1.0);
      for (const auto& cl : right_null_vectors(r)) {
        const double scale = std::max(1.0, cl.S.norm());
        CHECK((r.A * cl.S + r.b * cl.f.transpose() - cl.S * cl.Lambda).norm() < 1e-8 * scale);
        CHECK((r.c.transpose() * cl.S + r.d * cl.f.transpose()).norm() < 1e-8 * scale);
      }
    }
  }

  TEST_CASE("scalar right null vector with d != 0 is proportional to (d, -c)") {
    const auto cls = right_null_vectors(scalar(0.5, 1.0, 2.0, 4.0));
    REQUIRE(cls.size() == 1);
    const double vr = cls[0].S(0, 0), vh = cls[0].f(0);
    CHECK(std::abs(vr * -2.0 - vh * 4.0) < 1e-12);
  }

  TEST_CASE("imaginary-axis pairs satisfy the complex null identity") {
    // (s^2 + 1)(s - 2) / ((s + 1)(s + 2)(s + 3))
    const auto r = tf_realization<double>(poly_from_roots<double>({C(0, 1), C(0, -1), C(2)}),
                                          poly_from_roots<double>({C(-1), C(-2), C(-3)}));
    const auto zd = zero_data(r);
    REQUIRE(zd.imag_pairs.size() == 1);
    const auto& ip = zd.imag_pairs[0];
    CHECK(std::abs(ip.lambda - C(0, 1)) < 1e-9);
    const CMat<double> A = r.A.cast<C>();
    const CVec<double> lhs = A.transpose() * ip.s + r.c.cast<C>() * ip.f - ip.lambda * ip.s;
    CHECK(lhs.norm() < 1e-9 * ip.s.norm());
    CHECK(std::abs(ip.s.dot(r.b.cast<C>()) + ip.f * r.d) < 1e-9);
    CHECK(zd.axis.k() == 2);
    // rows (Re s, -Im s) with the rotation block F(j) = [[0, 1], [-1, 0]]
    CHECK(std::abs(zd.axis.Lambda(0, 1) * zd.axis.Lambda(1, 0) + 1.0) < 1e-9);
    CHECK(block_residual(r, zd.axis) < 1e-9);
  }

  TEST_CASE("a zero on the imaginary axis within tau_axis is routed to the axis pairs") {
    const auto r = tf_realization<double>(poly_from_roots<double>({C(1e-10, 1), C(1e-10, -1)}),
                                          poly_from_roots<double>({C(-1), C(-2)}));
    const auto zd = zero_data(r);
    CHECK(zd.imag_pairs.size() == 1);
    CHECK(zd.k_plus() == 0);
  }

  TEST_CASE("repeated zeros give a Jordan chain with multiplicity 2") {
    const auto r = tf_realization<double>(poly_from_roots<double>({C(1), C(1)}),
                                          poly_from_roots<double>({C(-1), C(-2), C(-3)}));
    const auto zd = zero_data(r);
    REQUIRE(zd.zeros.size() == 1);
    CHECK(zd.zeros[0].multiplicity == 2);
    REQUIRE(zd.plus.k() == 2);
    CHECK(std::abs(zd.plus.Lambda(0, 1)) > 0.5);
    CHECK(block_residual(r, zd.plus) < 1e-8);
  }

  TEST_CASE("infinite-zero basis") {
    CHECK(infinite_zero_basis(scalar(1, 1, 1, 1), 0).P.cols() == 0);
    Mat<double> A(2, 2);
    A << 0, 1, 0, 0;
    Vec<double> b(2), c(2);
    b << 0, 1;
    c << 1, 0;
    const Realization<double> r{A, b, c, 0.0};
    const auto ib = infinite_zero_basis(r, 2);
    REQUIRE(ib.P.cols() == 2);
    CHECK(ib.P.col(0).norm() == 0.0);
    CHECK((ib.P.col(1) - c).norm() == 0.0);
    CHECK(ib.p(0) == 1.0);
    CHECK(ib.p(1) == 0.0);
    // b^T (A^T)^k c = 0 for k < r - 1 on the chain columns
    for (int k = 0; k < 1; ++k) CHECK(std::abs(b.dot(ib.P_hat.col(k))) < 1e-12);
    CHECK((ib.P_hat - (A.transpose() * ib.P + c * ib.p.transpose())).norm() < 1e-12);
  }

  TEST_CASE("partition of all-stable and all-unstable zeros") {
    const auto stable = zero_data(tf_realization<double>(poly_from_roots<double>({C(-1), C(-4)}),
                                                         poly_from_roots<double>({C(1), C(-2), C(-3)})));
    CHECK(stable.k_plus() == 0);
    CHECK(stable.k_minus() == 2);
    const auto unstable = zero_data(tf_realization<double>(poly_from_roots<double>({C(1), C(4)}),
                                                           poly_from_roots<double>({C(1.5), C(-2), C(-3)})));
    const auto part = partition_zeros(unstable);
    CHECK(part.k_minus == 0);
    CHECK(part.k_plus == 2);
  }

  TEST_CASE("null-vector rescaling keeps the residual identity") {
    const auto r = scalar(-1, 1, -2, 1);
    auto blk = zero_data(r).plus;
    blk.S *= -7.5;
    blk.f *= -7.5;
    CHECK(block_residual(r, blk) < 1e-14);
  }
}
