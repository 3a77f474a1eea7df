#pragma once

#include "hinf/core.hpp"

#include <iosfwd>
#include <vector>

namespace hinf {

/// Block-diagonal symmetric matrix.
template <class Scalar>
using Blocks = std::vector<Mat<Scalar>>;

/// SDPA standard form
///   (P) min c^T x  s.t.  X = sum_i x_i F_i - F_0 >= 0
///   (D) max F_0 . Y  s.t.  F_i . Y = c_i,  Y >= 0.
/// F[0] is F_0; F[i] for i = 1..m are the coefficient matrices.
template <class Scalar>
struct SdpProblem {
  std::vector<int> block_sizes;
  std::vector<Blocks<Scalar>> F;
  Vec<Scalar> c;

  int m() const { return static_cast<int>(c.size()); }
  int dim() const;
  /// sum_i x_i F_i - F_0.
  Blocks<Scalar> slack(const Vec<Scalar>& x) const;
  /// (F_i . Y)_i.
  Vec<Scalar> apply_adjoint(const Blocks<Scalar>& Y) const;
  void validate() const;
};

enum class SdpStatus { Optimal, Infeasible, Unbounded, MaxIter, NearSingular };

std::string_view to_string(SdpStatus s);

template <class Scalar>
struct SdpSolution {
  SdpStatus status = SdpStatus::MaxIter;
  Vec<Scalar> x;
  Blocks<Scalar> X, Y;
  Scalar primal_objective = Scalar(0);
  Scalar dual_objective = Scalar(0);
  Scalar gap = Scalar(0);  ///< primal - dual objective
  Scalar primal_residual = Scalar(0);
  Scalar dual_residual = Scalar(0);
  int iterations = 0;
};

struct SdpOptions {
  int max_iter = 120;
  double gap_tol = 1e-9;
  double feas_tol = 1e-10;
  int block_cap = 60;
  double step = 0.95;
  double divergence = 1e12;  ///< iterate norm ratio declaring (in)feasibility
};

/// Infeasible-start primal-dual path following (HKM direction, Mehrotra
/// predictor-corrector). Throws Unsupported if a block exceeds block_cap.
template <class Scalar>
SdpSolution<Scalar> sdp_solve(const SdpProblem<Scalar>& p, const SdpOptions& opts = {});

/// Sparse SDPA text format (upper triangles, 1-based indices).
template <class Scalar>
void write_sdpa(std::ostream& os, const SdpProblem<Scalar>& p);

/// A . B summed over blocks.
template <class Scalar>
Scalar inner(const Blocks<Scalar>& A, const Blocks<Scalar>& B);

/// Smallest eigenvalue over all blocks (+inf for no blocks).
template <class Scalar>
Scalar min_eigenvalue(const Blocks<Scalar>& A);

}  // namespace hinf
