#include "helpers.hpp"
#include "hinf/plant_io.hpp"

#include <doctest.h>

using namespace hinf;
using hinf::test::C;

namespace {

Realization<double> scalar(double a, double b, double c, double d) {
  return {Mat<double>::Constant(1, 1, a), Vec<double>::Constant(1, b), Vec<double>::Constant(1, c), d};
}

StateSpacePlant<double> small_plant() {
  StateSpacePlant<double> p;
  p.n = 1;
  p.A = Mat<double>::Constant(1, 1, -1.0);
  p.b1 = Vec<double>::Constant(1, 0.5);
  p.b2 = Vec<double>::Constant(1, 1.0);
  p.c1 = Vec<double>::Constant(1, -2.0);
  p.c2 = Vec<double>::Constant(1, 3.0);
  p.d11 = 0.25;
  p.d12 = 1.0;
  p.d21 = -1.0;
  return p;
}

}  // namespace

TEST_SUITE("plant_model") {
  TEST_CASE("channel realizations select the plant data") {
    const auto p = small_plant();
    const auto zu = channel_realization(p, Channel::ZU);
    CHECK(zu.A(0, 0) == -1.0);
    CHECK(zu.b(0) == 1.0);
    CHECK(zu.c(0) == -2.0);
    CHECK(zu.d == 1.0);
    CHECK(channel_realization(p, Channel::YU).d == 0.0);
  }

  TEST_CASE("YW is stored transposed and transposes back") {
    std::mt19937_64 rng(3);
    auto p = small_plant();
    p.n = 3;
    p.A = test::random_matrix(rng, 3, 3);
    p.b1 = test::random_matrix(rng, 3, 1);
    p.b2 = test::random_matrix(rng, 3, 1);
    p.c1 = test::random_matrix(rng, 3, 1);
    p.c2 = test::random_matrix(rng, 3, 1);
    const auto yw = channel_realization(p, Channel::YW);
    CHECK(yw.A == p.A.transpose());
    const auto back = yw.dual();
    CHECK(back.A == p.A);
    CHECK(back.b == p.b1);
    CHECK(back.c == p.c2);
    CHECK(back.d == p.d21);
  }

  TEST_CASE("an empty state leaves the pure gain") {
    StateSpacePlant<double> p;
    p.A = Mat<double>(0, 0);
    p.b1 = p.b2 = p.c1 = p.c2 = Vec<double>(0);
    p.d11 = 0.7;
    p.validate();
    const auto zw = channel_realization(p, Channel::ZW);
    CHECK(zw.n() == 0);
    CHECK(transfer_eval(zw, C(0.0, 1.0)) == C(0.7));
  }

  TEST_CASE("transfer_eval examples") {
    CHECK(std::abs(transfer_eval(scalar(-1, 1, -2, 1), C(1.0))) < 1e-15);
    CHECK(std::abs(transfer_eval(scalar(0, 1, 1, 0), C(2.0)) - 0.5) < 1e-15);
    CHECK(transfer_eval(scalar(-1, 1, -2, 1), infinity) == C(1.0));
    CHECK_THROWS_AS(transfer_eval(scalar(2, 1, 1, 0), C(2.0)), Error);
  }

  TEST_CASE("transfer_eval agrees with the explicit rational function") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 50; ++trial) {
      const double d = nd(rng);
      const C s(nd(rng), nd(rng));
      // one state: c b / (s - a) + d
      const double a = nd(rng), b = nd(rng), c = nd(rng);
      const C g1 = c * b / (s - a) + d;
      CHECK(std::abs(transfer_eval(scalar(a, b, c, d), s) - g1) <= 1e-12 * std::max(1.0, std::abs(g1)));
      // two states: c^T adj(sI - A) b / det(sI - A) + d
      const Mat<double> A = test::random_matrix(rng, 2, 2);
      const Vec<double> bv = test::random_matrix(rng, 2, 1), cv = test::random_matrix(rng, 2, 1);
      const C det = (s - A(0, 0)) * (s - A(1, 1)) - A(0, 1) * A(1, 0);
      const C num = cv(0) * ((s - A(1, 1)) * bv(0) + A(0, 1) * bv(1)) +
                    cv(1) * (A(1, 0) * bv(0) + (s - A(0, 0)) * bv(1));
      const C g2 = num / det + d;
      CHECK(std::abs(transfer_eval(Realization<double>{A, bv, cv, d}, s) - g2) <=
            1e-12 * std::max(1.0, std::abs(g2)));
    }
  }

  TEST_CASE("PBH stabilizability and detectability") {
    const auto M = [](double a) { return Mat<double>::Constant(1, 1, a); };
    const auto v = [](double x) { return Vec<double>::Constant(1, x); };
    CHECK(check_stabilizable<double>(M(-1), v(0)));
    CHECK_FALSE(check_stabilizable<double>(M(1), v(0)));
    CHECK(check_stabilizable<double>(M(1), v(1)));
    CHECK(check_detectable<double>(M(1), v(1)));
    CHECK_FALSE(check_detectable<double>(M(1), v(0)));
    Mat<double> A = Mat<double>::Zero(2, 2);
    A.diagonal() << -1, 2;
    Vec<double> c(2);
    c << 0, 1;
    CHECK(check_detectable<double>(A, c));
  }

  TEST_CASE("validate rejects inconsistent or non-finite data") {
    auto p = small_plant();
    p.b1 = Vec<double>::Zero(2);
    CHECK_THROWS_AS(p.validate(), Error);
    p = small_plant();
    p.d11 = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(p.validate(), Error);
  }

  TEST_CASE("plant JSON round trip and strict keys") {
    const auto p = small_plant();
    const auto j = plant_to_json(p);
    const auto q = plant_from_json(j);
    CHECK(q.A == p.A);
    CHECK(q.d21 == p.d21);
    auto extra = j;
    extra["note"] = 1;
    CHECK_THROWS_AS(plant_from_json(extra), Error);
    auto missing = j;
    missing.erase("d11");
    CHECK_THROWS_AS(plant_from_json(missing), Error);
  }
}
