#pragma once

#include "hinf/gamma.hpp"

#include <random>

namespace hinf::test {

using C = std::complex<double>;

// Sensitivity plant of a SISO loop with the given zeros and poles, plus a
// stable pole at -1 when needed to make the loop strictly proper.
inline StateSpacePlant<double> sensitivity_example(const std::vector<C>& zeros, std::vector<C> poles) {
  if (poles.size() <= zeros.size()) poles.push_back(C(-1.0));
  const auto r = tf_realization<double>(poly_from_roots<double>(zeros), poly_from_roots<double>(poles));
  return sensitivity_plant(r.A, r.b, r.c);
}

inline Mat<double> random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> nd;
  Mat<double> M(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) M(i, j) = nd(rng);
  return M;
}

inline Mat<double> random_hurwitz(std::mt19937_64& rng, int n) {
  Mat<double> M = random_matrix(rng, n, n);
  const double shift = Eigen::EigenSolver<Mat<double>>(M, false).eigenvalues().real().maxCoeff();
  M.diagonal().array() -= shift + 0.5;
  return M;
}

inline Mat<double> random_spd(std::mt19937_64& rng, int n) {
  const Mat<double> M = random_matrix(rng, n, n);
  return M * M.transpose() + 0.1 * Mat<double>::Identity(n, n);
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace hinf::test
