#include "helpers.hpp"
#include "hinf/lmi.hpp"
#include "hinf/random_plants.hpp"

#include <doctest.h>

#include <sstream>

using namespace hinf;
using hinf::test::C;

namespace {

// Every solve in this file goes through here: weak duality must hold.
SdpSolution<double> solve(const SdpProblem<double>& p, const SdpOptions& opts = {}) {
  const auto s = sdp_solve(p, opts);
  if (s.status == SdpStatus::Optimal) {
    CHECK(s.dual_objective <= s.primal_objective + 1e-8 * (1 + std::abs(s.primal_objective)));
    CHECK(std::abs(s.gap - (s.primal_objective - s.dual_objective)) < 1e-12 * (1 + std::abs(s.primal_objective)));
  }
  return s;
}

SdpProblem<double> one_by_one(double bound) {
  // min x  s.t.  x - bound >= 0
  SdpProblem<double> p;
  p.block_sizes = {1};
  p.F = {{Mat<double>::Constant(1, 1, bound)}, {Mat<double>::Ones(1, 1)}};
  p.c = Vec<double>::Ones(1);
  return p;
}

Mat<double> assemble3(const Mat<double>& U11, const Mat<double>& U21, const Mat<double>& U22, const Mat<double>& U31,
                      const Mat<double>& U32, const Mat<double>& U33) {
  const int k = U11.rows(), l = U22.rows(), m = U33.rows();
  Mat<double> U(k + l + m, k + l + m);
  U << U11, U21.transpose(), U31.transpose(), U21, U22, U32.transpose(), U31, U32, U33;
  return U;
}

bool psd(const Mat<double>& U, double tol) {
  return Eigen::SelfAdjointEigenSolver<Mat<double>>(U).eigenvalues().minCoeff() >= -tol * std::max(1.0, U.trace());
}

}  // namespace

TEST_SUITE("lmi_oracle") {
  TEST_CASE("1x1 SDP") {
    const auto s = solve(one_by_one(2.0));
    CHECK(s.status == SdpStatus::Optimal);
    CHECK(s.primal_objective == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(s.dual_objective == doctest::Approx(2.0).epsilon(1e-8));
  }

  TEST_CASE("strictly feasible pair closes the gap") {
    // min tr(C X) over X = [[x1, x2], [x2, x3]] >= 0 with x1 + x3 = 1 as an LMI
    // in (x1, x2, x3): min x1 + 2 x2 + 3 x3, trace pinned by a 2-sided bound.
    SdpProblem<double> p;
    p.block_sizes = {2, 1, 1};
    auto E = [](int i, int j) {
      Mat<double> M = Mat<double>::Zero(2, 2);
      M(i, j) = M(j, i) = 1.0;
      return M;
    };
    const Mat<double> one = Mat<double>::Ones(1, 1), zero = Mat<double>::Zero(1, 1);
    p.F = {{Mat<double>::Zero(2, 2), one, -one}, {E(0, 0), one, -one}, {E(0, 1), zero, zero}, {E(1, 1), one, -one}};
    p.c = Vec<double>(3);
    p.c << 1, 2, 3;
    const auto s = solve(p);
    REQUIRE(s.status == SdpStatus::Optimal);
    // min eigenvalue of [[1, 1], [1, 3]]
    CHECK(s.primal_objective == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-7));
    CHECK(std::abs(s.gap) <= 1e-7 * (1 + std::abs(s.primal_objective)));
  }

  TEST_CASE("infeasible problems are detected") {
    // x >= 1 and -x >= 0
    SdpProblem<double> p;
    p.block_sizes = {1, 1};
    p.F = {{Mat<double>::Ones(1, 1), Mat<double>::Zero(1, 1)}, {Mat<double>::Ones(1, 1), -Mat<double>::Ones(1, 1)}};
    p.c = Vec<double>::Ones(1);
    CHECK(solve(p).status == SdpStatus::Infeasible);
  }

  TEST_CASE("block cap") {
    SdpProblem<double> p;
    p.block_sizes = {3};
    p.F = {{Mat<double>::Zero(3, 3)}, {Mat<double>::Identity(3, 3)}};
    p.c = Vec<double>::Ones(1);
    SdpOptions o;
    o.block_cap = 2;
    CHECK_THROWS_AS(sdp_solve(p, o), Error);
  }

  TEST_CASE("SDPA sparse output") {
    std::ostringstream os;
    write_sdpa(os, one_by_one(2.0));
    const std::string s = os.str();
    CHECK(s.find("1\n1\n1\n") == 0);
    CHECK(s.find("0 1 1 1 2") != std::string::npos);
    CHECK(s.find("1 1 1 1 1") != std::string::npos);
  }

  TEST_CASE("full LMI brackets gamma* of the sensitivity example") {
    const auto plant = test::sensitivity_example({C(2)}, {C(4)});
    CHECK(solve(assemble_lmi_full(plant, std::optional<double>(3.1)).sdp).status == SdpStatus::Optimal);
    CHECK(solve(assemble_lmi_full(plant, std::optional<double>(2.9)).sdp).status == SdpStatus::Infeasible);
    const auto full = assemble_lmi_full(plant, std::optional<double>(3.0));
    CHECK(full.sdp.block_sizes[0] == plant.n + 1);
    CHECK(full.sdp.block_sizes[1] == plant.n + 1);
    CHECK(full.sdp.block_sizes[2] == 2 * plant.n);
  }

  TEST_CASE("bisection examples") {
    const auto b1 = bisect_gamma(test::sensitivity_example({C(2)}, {C(4)}));
    CHECK(b1.conclusive);
    CHECK(std::abs(b1.gamma - 3.0) <= 1e-5);

    StateSpacePlant<double> gain;
    gain.n = 1;
    gain.A = Mat<double>::Constant(1, 1, -1);
    gain.b1 = Vec<double>::Zero(1);
    gain.b2 = gain.c1 = gain.c2 = Vec<double>::Ones(1);
    gain.d11 = 0.7;
    gain.d21 = 1;
    CHECK(std::abs(bisect_gamma(gain).gamma - 0.7) <= 1e-5);

    std::mt19937_64 rng(3);
    RandomPlantSpec spec;
    spec.all_stable = true;
    CHECK(bisect_gamma(random_plant(spec, rng).plant).gamma <= 1e-4);
  }

  TEST_CASE("large gamma makes the full LMI strictly feasible") {
    for (const auto& rp : random_suite(5, 8)) {
      const double g = 10 * (1 + gamma_star(rp.plant).gamma_star);
      const auto r = strict_feasibility_probe(assemble_lmi_full(rp.plant, std::optional<double>(g)).sdp,
                                              ProbeSide::Primal);
      CHECK(r.outcome == ProbeOutcome::StrictlyFeasible);
    }
  }

  TEST_CASE("reduced problems: sizes, side constraints and optimal value") {
    int compared = 0;
    for (const auto& rp : random_suite(77, 16, 2, 5)) {
      const auto r = gamma_star(rp.plant);
      const auto red = assemble_reduced(rp.plant, r.case_id);
      const int k1 = r.zu.k_plus(), k2 = r.yw.k_plus();
      if (r.case_id == GammaCase::Case2) CHECK(red.sdp.block_sizes[2] == k1 + k2);
      if (r.case_id == GammaCase::Case3) {
        const int axis = static_cast<int>(r.imag_terms_zu.size() + r.imag_terms_yw.size());
        CHECK(static_cast<int>(red.block_names.size()) >= 3 + axis);
      }
      if (r.case_id == GammaCase::Case4) {
        bool has_d11 = false;
        for (int b : red.sdp.block_sizes) has_d11 |= b == 2;
        CHECK(has_d11);
      }
      const auto s = solve(red.sdp);
      if (s.status != SdpStatus::Optimal) continue;
      CHECK(std::abs(s.primal_objective - r.gamma_star) <= 1e-6 * std::max(1.0, r.gamma_star));
      // reduced against the (facially reduced) full LMI
      const auto b = bisect_gamma(rp.plant);
      CHECK(std::abs(s.primal_objective - b.gamma) <= 1e-6 * std::max(1.0, b.gamma));
      ++compared;
    }
    MESSAGE("reduced solves compared: " << compared);
    // The solver can stall (NearSingular) on reduced Case 1 problems with large gamma*.
    CHECK(compared >= 8);
  }

  TEST_CASE("strict feasibility alternatives") {
    const auto plant = test::sensitivity_example({C(2)}, {C(4), C(-3)});
    const auto full = assemble_lmi_full(plant, std::optional<double>{}, PerpMode::NullVector);
    CHECK(strict_feasibility_probe(full.sdp, ProbeSide::Primal).outcome == ProbeOutcome::StrictlyFeasible);
    // the stable zero at -3 of G_yw makes the unreduced dual lose strict feasibility
    const auto dual = strict_feasibility_probe(full.sdp, ProbeSide::Dual);
    CHECK(dual.outcome == ProbeOutcome::ReducingDirectionFound);
    const auto [reduced, report] = facial_reduce_dual(full);
    CHECK(report.m_after < report.m_before);
    CHECK(strict_feasibility_probe(reduced, ProbeSide::Dual).outcome == ProbeOutcome::StrictlyFeasible);
  }

  TEST_CASE("Case 3 reduced dual pairs the axis entries") {
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
    p.d11 = 0.2;
    p.d21 = 1.0;
    const auto lmi = assemble_reduced(p, GammaCase::Case3);
    const auto s = solve(lmi.sdp);
    REQUIRE(s.status == SdpStatus::Optimal);
    CHECK(s.primal_objective == doctest::Approx(gamma_star(p).gamma_star).epsilon(1e-6));
    const auto pc = dual_pattern(lmi, s.Y);
    CHECK(pc.worst <= 1e-6);
  }

  TEST_CASE("matrix completion examples") {
    const Mat<double> I2 = Mat<double>::Identity(2, 2);
    const Mat<double> Z21 = Mat<double>::Zero(2, 1), Z12 = Mat<double>::Zero(1, 2);
    // zero U33 forces zero borders; U21 = 0 works
    const auto U21 = matrix_completion<double>(I2, Z12, I2, Z12, Mat<double>::Zero(1, 1));
    CHECK(U21.norm() == 0.0);
    // identity diagonal blocks, zero borders
    CHECK(matrix_completion<double>(I2, Z12, I2, Z12, Mat<double>::Identity(1, 1)).norm() == 0.0);
    // U33 = 1: rank-one completion U32 U31^T
    Mat<double> U31(1, 2), U32(1, 2);
    U31 << 0.5, -0.3;
    U32 << 0.2, 0.6;
    const auto W = matrix_completion<double>(I2, U31, I2, U32, Mat<double>::Ones(1, 1));
    CHECK((W - U32.transpose() * U31).norm() < 1e-12);
    CHECK(psd(assemble3(I2, W, I2, U31, U32, Mat<double>::Ones(1, 1)), 1e-9));
    // hypothesis violated
    Mat<double> big(1, 2);
    big << 3, 0;
    CHECK_THROWS_AS(matrix_completion<double>(I2, big, I2, U32, Mat<double>::Ones(1, 1)), Error);
  }

  TEST_CASE("matrix completion on 100 random hypothesis-satisfying instances") {
    std::mt19937_64 rng(53);
    for (int t = 0; t < 100; ++t) {
      const int k = 1 + t % 3, l = 1 + (t / 3) % 3, m = 1 + (t / 9) % 3;
      // PSD of size k + l + m with a possibly singular U33, then discard U21.
      const int rank = 1 + t % (k + l + m);
      const Mat<double> G = test::random_matrix(rng, k + l + m, rank);
      const Mat<double> U = G * G.transpose();
      const Mat<double> U11 = U.topLeftCorner(k, k), U22 = U.block(k, k, l, l), U33 = U.bottomRightCorner(m, m);
      const Mat<double> U31 = U.block(k + l, 0, m, k), U32 = U.block(k + l, k, m, l);
      const auto W = matrix_completion(U11, U31, U22, U32, U33);
      CHECK(psd(assemble3(U11, W, U22, U31, U32, U33), 1e-9));
    }
  }

  TEST_CASE("facial reduction preserves the optimum") {
    for (const auto& rp : random_suite(9, 12, 2, 4)) {
      if (rp.target == GammaCase::Case1 || rp.target == GammaCase::Case3) continue;
      const auto full = assemble_lmi_full(rp.plant, std::optional<double>{}, PerpMode::NullVector);
      const auto [reduced, report] = facial_reduce_dual(full);
      CHECK(!report.faces.empty());
      CHECK(report.m_after <= report.m_before);
      const auto b = bisect_gamma(rp.plant);
      CHECK(b.reduced);
      CHECK(std::abs(b.gamma - gamma_star(rp.plant).gamma_star) <= 1e-5);
    }
  }
}
