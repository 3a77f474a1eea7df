#pragma once

#include "hinf/gamma.hpp"

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace hinf {

// Seeded plants. A is Gaussian / sqrt(n) shifted to a random number of
// unstable modes, b and c are Gaussian and d entries come from
// {0, +-0.5, +-1}. Cases 1 and 3 (and the all-stable variant) move the
// natural zeros of G_zu and G_yw: reflected across the axis, or the pair
// nearest the axis replaced by +-jw, then re-placed through the controllable
// canonical form. Draws with large c1 or b1 are rejected.

struct RandomPlantSpec {
  int n = 3;
  GammaCase target = GammaCase::Case1;
  bool all_stable = false;  // every finite zero of G_zu and G_yw stable
  double coefficient_cap = 20.0;  // redraw while |c1| or |b1| exceeds this
};

struct RandomPlant {
  StateSpacePlant<double> plant;
  GammaCase target = GammaCase::Case1;
  bool all_stable = false;
  std::vector<std::complex<double>> zu_zeros, yw_zeros;
};

RandomPlant random_plant(const RandomPlantSpec& spec, std::mt19937_64& rng);

// `count` plants cycling through Case1..Case4 with n uniform in
// [n_min, n_max]. Plant i depends only on (seed, i).
std::vector<RandomPlant> random_suite(std::uint64_t seed, int count, int n_min = 2, int n_max = 6);

// c with c^T (sI - A)^-1 b + d having the given zeros: d q(s) / a(s) when
// d != 0, kappa q(s) / a(s) otherwise (deg q < n). Throws
// DegenerateRealization when (A, b) is not controllable.
Vec<double> place_zeros(const Mat<double>& A, const Vec<double>& b,
                        const std::vector<std::complex<double>>& zeros, double d, double kappa = 1.0);

}  // namespace hinf
