#include "hinf/gramians.hpp"

namespace hinf {

template <class Scalar>
Scalar lyapunov_residual(const Mat<Scalar>& M, const Mat<Scalar>& X, const Mat<Scalar>& Q) {
  if (M.size() == 0) return Scalar(0);
  const Scalar scale = std::max({Q.norm(), X.norm() * M.norm(), std::numeric_limits<Scalar>::min()});
  return (M.transpose() * X + X * M + Q).norm() / scale;
}

template <class Scalar>
GramianSet<Scalar> build_gramians(const ZeroData<Scalar>& zu, const ZeroData<Scalar>& yw,
                                  const StateSpacePlant<Scalar>& plant, const Tolerances<Scalar>& tol) {
  const NullBlock<Scalar>& s = zu.plus;
  const NullBlock<Scalar>& t = yw.plus;
  GramianSet<Scalar> g;
  g.h1 = s.S.transpose() * plant.b1 + plant.d11 * s.f;
  g.h2 = t.S.transpose() * plant.c1 + plant.d11 * t.f;
  g.J = t.S.transpose() * s.S;
  const Mat<Scalar> ML = -s.Lambda;
  const Mat<Scalar> MO = -t.Lambda;
  const Mat<Scalar> Qf = s.f * s.f.transpose();
  const Mat<Scalar> Qg = t.f * t.f.transpose();
  const Mat<Scalar> Q1 = g.h1 * g.h1.transpose();
  const Mat<Scalar> Q2 = g.h2 * g.h2.transpose();
  g.F = solve_lyapunov(ML, Qf, tol);
  g.G = solve_lyapunov(MO, Qg, tol);
  g.H1 = solve_lyapunov(ML, Q1, tol);
  g.H2 = solve_lyapunov(MO, Q2, tol);
  g.residual = std::max({lyapunov_residual(ML, g.F, Qf), lyapunov_residual(MO, g.G, Qg),
                         lyapunov_residual(ML, g.H1, Q1), lyapunov_residual(MO, g.H2, Q2)});
  return g;
}

#define HINF_INSTANTIATE(S)                                                                  \
  template GramianSet<S> build_gramians(const ZeroData<S>&, const ZeroData<S>&,              \
                                        const StateSpacePlant<S>&, const Tolerances<S>&);    \
  template S lyapunov_residual(const Mat<S>&, const Mat<S>&, const Mat<S>&);

HINF_INSTANTIATE(double)
HINF_INSTANTIATE(long double)

}  // namespace hinf
