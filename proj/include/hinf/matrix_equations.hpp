#pragma once

#include "hinf/core.hpp"

#include <utility>
#include <vector>

namespace hinf {

/// Diagonal blocks (start, size) of a real quasi-triangular Schur factor.
template <class Scalar>
std::vector<std::pair<int, int>> schur_blocks(const Mat<Scalar>& T);

/// Exchange the adjacent diagonal blocks of sizes p1, p2 starting at row k
/// of the quasi-triangular T, updating the orthogonal factor U so that
/// U T U^T is preserved. The blocks must have disjoint spectra.
template <class Scalar>
void swap_schur_blocks(Mat<Scalar>& T, Mat<Scalar>& U, int k, int p1, int p2);

/// X with A X + X B = C (Bartels-Stewart). Throws SpectraOverlap when
/// A and -B share an eigenvalue within the rank tolerance.
template <class Scalar>
Mat<Scalar> solve_sylvester(const Mat<Scalar>& A, const Mat<Scalar>& B, const Mat<Scalar>& C);

/// X with M^T X + X M = -Q for Hurwitz M. NotHurwitz if some eigenvalue has
/// Re > tau_axis, IllConditioned if one lies within tau_axis of the axis.
template <class Scalar>
Mat<Scalar> solve_lyapunov(const Mat<Scalar>& M, const Mat<Scalar>& Q,
                           const Tolerances<Scalar>& tol = {});

/// Symmetric PSD square root via the eigendecomposition.
template <class Scalar>
Mat<Scalar> sym_sqrt(const Mat<Scalar>& P, const Tolerances<Scalar>& tol = {});

/// P^{-1/2}; requires lambda_min(P) > pd_rel * trace(P) / dim(P).
template <class Scalar>
Mat<Scalar> inv_sqrt(const Mat<Scalar>& P, const Tolerances<Scalar>& tol = {});

}  // namespace hinf
