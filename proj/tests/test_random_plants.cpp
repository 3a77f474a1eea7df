#include "hinf/plant_io.hpp"
#include "hinf/random_plants.hpp"

#include <doctest.h>

using namespace hinf;

TEST_SUITE("random_plants") {
  TEST_CASE("a suite depends only on the seed") {
    const auto a = random_suite(42, 12), b = random_suite(42, 12), c = random_suite(43, 12);
    REQUIRE(a.size() == 12);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(plant_to_json(a[i].plant).dump() == plant_to_json(b[i].plant).dump());
      differs |= plant_to_json(a[i].plant).dump() != plant_to_json(c[i].plant).dump();
    }
    CHECK(differs);
    // plant i does not depend on the suite length
    CHECK(plant_to_json(random_suite(42, 3)[2].plant).dump() == plant_to_json(a[2].plant).dump());
  }

  TEST_CASE("targets are met and cases are covered") {
    const auto suite = random_suite(42, 50);
    int counts[4] = {};
    for (const auto& rp : suite) {
      const auto r = gamma_star(rp.plant);
      CHECK(r.case_id == rp.target);
      CHECK(rp.plant.n >= 2);
      CHECK(rp.plant.n <= 6);
      CHECK(check_stabilizable(rp.plant.A, rp.plant.b2));
      CHECK(check_detectable(rp.plant.A, rp.plant.c2));
      if (r.case_id != GammaCase::ZwFallback) ++counts[static_cast<int>(r.case_id)];
    }
    for (int c : counts) CHECK(c >= 8);
  }

  TEST_CASE("all-stable plants have only stable finite zeros") {
    std::mt19937_64 rng(8);
    RandomPlantSpec spec;
    spec.all_stable = true;
    for (int n = 1; n <= 6; ++n) {
      spec.n = n;
      const auto rp = random_plant(spec, rng);
      for (const auto& z : rp.zu_zeros) CHECK(z.real() < 0.0);
      for (const auto& z : rp.yw_zeros) CHECK(z.real() < 0.0);
    }
  }

  TEST_CASE("place_zeros puts the requested zeros") {
    std::mt19937_64 rng(1);
    const auto rp = random_plant({}, rng);
    const std::vector<std::complex<double>> want{{-1.0, 0.0}, {2.0, 1.0}, {2.0, -1.0}};
    const auto c = place_zeros(rp.plant.A, rp.plant.b2, want, 1.0);
    auto got = compute_zeros(Realization<double>{rp.plant.A, rp.plant.b2, c, 1.0});
    REQUIRE(got.size() == 3);
    CHECK(std::abs(got[0].value - want[0]) < 1e-8);
  }
}
