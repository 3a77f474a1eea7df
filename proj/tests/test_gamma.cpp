#include "helpers.hpp"
#include "hinf/random_plants.hpp"

#include <doctest.h>

using namespace hinf;
using hinf::test::C;

namespace {

StateSpacePlant<double> similar(const StateSpacePlant<double>& p, const Mat<double>& V) {
  const Mat<double> Vi = V.inverse();
  auto q = p;
  q.A = V * p.A * Vi;
  q.b1 = V * p.b1;
  q.b2 = V * p.b2;
  q.c1 = Vi.transpose() * p.c1;
  q.c2 = Vi.transpose() * p.c2;
  return q;
}

// G_zu = (s^2 + 1) / ((s - 1)(s + 2)) with d12 = 1.
StateSpacePlant<double> axis_plant(double d11) {
  const auto r = tf_realization<double>(poly_from_roots<double>({C(0, 1), C(0, -1)}),
                                        poly_from_roots<double>({C(1), C(-2)}));
  StateSpacePlant<double> p;
  p.n = 2;
  p.A = r.A;
  p.b2 = r.b;
  p.c1 = r.c;
  p.d12 = r.d;
  p.b1 = Vec<double>(2);
  p.b1 << 0.3, 1.0;
  p.c2 = Vec<double>(2);
  p.c2 << 1.0, 0.5;
  p.d11 = d11;
  p.d21 = 1.0;
  return p;
}

}  // namespace

TEST_SUITE("gamma_limit") {
  TEST_CASE("single unstable zero and pole: |(p + z) / (p - z)|") {
    for (auto [z, p] : std::vector<std::pair<double, double>>{{1, 2}, {2, 4}, {0.5, 3}, {1, 3}}) {
      const auto plant = test::sensitivity_example({C(z)}, {C(p)});
      const auto r = gamma_star(plant);
      CHECK(r.gamma_star == doctest::Approx(std::abs((p + z) / (p - z))).epsilon(1e-9));
      CHECK(r.case_id == GammaCase::Case4);
      // F = f^2 / 2z, G = g^2 / 2p, |J| = |f g| / |p - z|
      const double f = r.zu.plus.f(0), g = r.yw.plus.f(0);
      CHECK(r.gramians.F(0, 0) == doctest::Approx(f * f / (2 * z)).epsilon(1e-12));
      CHECK(r.gramians.G(0, 0) == doctest::Approx(g * g / (2 * p)).epsilon(1e-12));
      CHECK(std::abs(r.gramians.J(0, 0)) == doctest::Approx(std::abs(f * g / (p - z))).epsilon(1e-12));
      // h2 = T^T c + g = 0 for the sensitivity embedding
      CHECK(r.gramians.h2.norm() < 1e-12);
      CHECK(r.gramians.H2.norm() < 1e-12);
      const auto r0 = tf_realization<double>(poly_from_roots<double>({C(z)}), poly_from_roots<double>({C(p), C(-1)}));
      CHECK(sensitivity_limit(r0.A, r0.b, r0.c) == doctest::Approx(r.gamma_star).epsilon(1e-12));
    }
  }

  TEST_CASE("two unstable zeros, one unstable pole") {
    const double z1 = 1, z2 = 2, p = 4;
    const auto r = gamma_star(test::sensitivity_example({C(z1), C(z2)}, {C(p), C(-1), C(-2)}));
    CHECK(r.gamma_star == doctest::Approx(5.0).epsilon(1e-8));
    // The printed sigma_max lacks the factor 2 that the gamma* formula implies.
    const double sigma = 2 * std::sqrt(p * (z1 + z2) * (p * p + z1 * z2)) / (std::abs(p - z1) * std::abs(p - z2));
    CHECK(r.hat_gamma == doctest::Approx(std::sqrt(1 + sigma * sigma)).epsilon(1e-9));
  }

  TEST_CASE("sensitivity limit of a minimum-phase stable loop is 1") {
    const auto r = tf_realization<double>(poly_from_roots<double>({C(-3)}), poly_from_roots<double>({C(-1), C(-2)}));
    CHECK(sensitivity_limit(r.A, r.b, r.c) == doctest::Approx(1.0));
  }

  TEST_CASE("hat_gamma of simple E") {
    CHECK(hat_gamma(Mat<double>(0, 0)) == 0.0);
    CHECK(hat_gamma<double>(Mat<double>::Zero(3, 3)) == 0.0);
    Mat<double> E(2, 2);
    E << 0, -2.5, -2.5, 0;
    CHECK(hat_gamma(E) == doctest::Approx(2.5));
  }

  TEST_CASE("E is symmetric with zero diagonal blocks") {
    const auto r = gamma_star(test::sensitivity_example({C(1), C(2)}, {C(4), C(3), C(-2)}));
    const auto& E = r.E;
    CHECK((E - E.transpose()).norm() < 1e-12 * E.norm());
    const int k1 = r.gramians.k1(), k2 = r.gramians.k2();
    CHECK(E.rows() == 2 * (k1 + k2));
    CHECK(E.topLeftCorner(k1, k1).norm() == 0.0);
    CHECK(E.block(k1, k1, k2, k2).norm() == 0.0);
    CHECK(E.bottomRightCorner(k1 + k2, k1 + k2).norm() == 0.0);
  }

  TEST_CASE("all zeros stable: gamma* = 0 by the short circuit") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 10; ++i) {
      RandomPlantSpec spec;
      spec.n = 2 + i % 4;
      spec.all_stable = true;
      const auto rp = random_plant(spec, rng);
      const auto r = gamma_star(rp.plant);
      CHECK(r.gamma_star == 0.0);
      CHECK(r.diagnostics.short_circuit);
      CHECK(r.gramians.k1() == 0);
      CHECK(r.gramians.k2() == 0);
      CHECK(r.E.size() == 0);
    }
  }

  TEST_CASE("d12 = 0 with no unstable or axis zeros gives |d11|") {
    StateSpacePlant<double> p;
    p.n = 1;
    p.A = Mat<double>::Constant(1, 1, -1);
    p.b1 = Vec<double>::Zero(1);
    p.b2 = p.c1 = p.c2 = Vec<double>::Ones(1);
    p.d11 = -0.7;
    p.d12 = 0;
    p.d21 = 1;
    const auto r = gamma_star(p);
    CHECK(r.case_id == GammaCase::Case4);
    CHECK(r.gamma_star == 0.7);
    REQUIRE(r.feedthrough_term);
    CHECK(*r.feedthrough_term == 0.7);
  }

  TEST_CASE("axis zero term equals |G_zw(j w)|") {
    const auto p = axis_plant(0.2);
    const auto r = gamma_star(p);
    CHECK(r.case_id == GammaCase::Case3);
    REQUIRE(r.imag_terms_zu.size() == 1);
    const double direct = std::abs(transfer_eval(channel_realization(p, Channel::ZW), C(0, 1)));
    CHECK(r.imag_terms_zu[0].value == doctest::Approx(direct).epsilon(1e-9));
    REQUIRE(r.imag_terms_zu[0].transfer_check);
    CHECK(r.gamma_star >= direct);
  }

  TEST_CASE("axis term reduces to |d11| when s^T b1 = 0") {
    auto p = axis_plant(0.4);
    p.b1.setZero();
    const auto r = gamma_star(p);
    REQUIRE(r.imag_terms_zu.size() == 1);
    CHECK(r.imag_terms_zu[0].value == doctest::Approx(0.4).epsilon(1e-12));
  }

  TEST_CASE("identically zero G_zu falls back to ||G_zw||_inf") {
    StateSpacePlant<double> p;
    p.n = 2;
    p.A = Mat<double>::Zero(2, 2);
    p.A.diagonal() << -1, -2;
    p.b1 = Vec<double>::Ones(2);
    p.b2 = Vec<double>::Unit(2, 0);
    p.c1 = Vec<double>::Unit(2, 1);
    p.c2 = Vec<double>::Ones(2);
    p.d21 = 1;
    const auto r = gamma_star(p);
    CHECK(r.case_id == GammaCase::ZwFallback);
    CHECK(r.gamma_star == doctest::Approx(0.5).epsilon(1e-6));
  }

  TEST_CASE("standing assumptions are enforced") {
    StateSpacePlant<double> p;
    p.n = 2;
    p.A = Mat<double>::Zero(2, 2);
    p.A.diagonal() << 1, -1;
    p.b1 = p.c1 = p.c2 = Vec<double>::Ones(2);
    p.b2 = Vec<double>::Unit(2, 1);
    p.d12 = p.d21 = 1;
    try {
      gamma_star(p);
      FAIL("expected NotStabilizable");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NotStabilizable);
    }
    p.b2 = Vec<double>::Ones(2);
    p.c2 = Vec<double>::Unit(2, 1);
    try {
      gamma_star(p);
      FAIL("expected NotDetectable");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NotDetectable);
    }
  }

  TEST_CASE("similarity invariance") {
    std::mt19937_64 rng(37);
    for (const auto& rp : random_suite(101, 24)) {
      const int n = rp.plant.n;
      Mat<double> V = test::random_matrix(rng, n, n) + 2 * Mat<double>::Identity(n, n);
      const double g0 = gamma_star(rp.plant).gamma_star;
      const double g1 = gamma_star(similar(rp.plant, V)).gamma_star;
      CHECK(std::abs(g1 - g0) <= 1e-7 * std::max(1.0, g0));
    }
  }

  TEST_CASE("null-vector scale invariance of hat_gamma") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.2, 5.0);
    for (const auto& rp : random_suite(202, 16)) {
      const auto r = gamma_star(rp.plant);
      if (r.gramians.k1() + r.gramians.k2() == 0 || r.case_id == GammaCase::ZwFallback) continue;
      auto zu = r.zu, yw = r.yw;
      // Scalings that commute with Lambda: one factor per zero cluster.
      auto rescale = [&](NullBlock<double>& b) {
        int j = 0;
        while (j < b.k()) {
          int len = 1;
          while (j + len < b.k() && b.Lambda.block(j, j + len, len, 1).norm() + b.Lambda.block(j + len, j, 1, len).norm() > 0) ++len;
          const double a = (rng() % 2 ? 1 : -1) * u(rng);
          b.S.middleCols(j, len) *= a;
          b.f.segment(j, len) *= a;
          j += len;
        }
      };
      rescale(zu.plus);
      rescale(yw.plus);
      const auto g = build_gramians(zu, yw, rp.plant);
      CHECK(std::abs(hat_gamma(build_E(g)) - r.hat_gamma) <= 1e-9 * std::max(1.0, r.hat_gamma));
    }
  }

  TEST_CASE("Case 4 bound and structural facts on seeded plants") {
    for (const auto& rp : random_suite(303, 40)) {
      const auto r = gamma_star(rp.plant);
      CHECK(r.case_id == rp.target);
      CHECK(r.gamma_star >= 0.0);
      if (rp.plant.d12 * rp.plant.d21 == 0.0) CHECK(r.gamma_star >= std::abs(rp.plant.d11));
      if ((r.case_id == GammaCase::Case1 || r.case_id == GammaCase::Case2) && r.gamma_star == 0.0)
        CHECK(r.gramians.h1.norm() + r.gramians.h2.norm() + r.gramians.J.norm() == 0.0);
      for (const auto& t : r.imag_terms_zu) CHECK(r.gamma_star >= t.value);
      for (const auto& t : r.imag_terms_yw) CHECK(r.gamma_star >= t.value);
    }
  }

  TEST_CASE("H-infinity norm on a grid") {
    const Realization<double> gain{Mat<double>(0, 0), Vec<double>(0), Vec<double>(0), -1.5};
    CHECK(hinf_norm_grid(gain) == doctest::Approx(1.5));
    const auto low = tf_realization<double>({1.0}, {1.0, 1.0});
    CHECK(hinf_norm_grid(low) == doctest::Approx(1.0).epsilon(1e-9));
    const auto allpass = tf_realization<double>({1.0, -1.0}, {1.0, 1.0});
    CHECK(hinf_norm_grid(allpass) == doctest::Approx(1.0).epsilon(1e-9));
  }
}
