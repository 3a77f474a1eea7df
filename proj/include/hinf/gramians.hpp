#pragma once

#include "hinf/matrix_equations.hpp"
#include "hinf/zeros.hpp"

namespace hinf {

/// Gramians of the unstable zero data of G_zu (Lambda_+, S_+, f_+) and
/// G_yw (Omega_+, T_+, g_+). F, G, H1, H2 solve
///   (-Lambda_+)^T F + F (-Lambda_+) = -f_+ f_+^T
/// and its analogues; J = T_+^T S_+, h1 = S_+^T b1 + d11 f_+,
/// h2 = T_+^T c1 + d11 g_+.
template <class Scalar>
struct GramianSet {
  Mat<Scalar> F, G, H1, H2, J;
  Vec<Scalar> h1, h2;
  Scalar residual = Scalar(0);  ///< max relative Lyapunov residual

  int k1() const { return static_cast<int>(F.rows()); }
  int k2() const { return static_cast<int>(G.rows()); }
};

template <class Scalar>
GramianSet<Scalar> build_gramians(const ZeroData<Scalar>& zu, const ZeroData<Scalar>& yw,
                                  const StateSpacePlant<Scalar>& plant,
                                  const Tolerances<Scalar>& tol = {});

/// Relative residual ||M^T X + X M + Q||_F / max(||Q||_F, ||X||_F ||M||_F).
template <class Scalar>
Scalar lyapunov_residual(const Mat<Scalar>& M, const Mat<Scalar>& X, const Mat<Scalar>& Q);

}  // namespace hinf
