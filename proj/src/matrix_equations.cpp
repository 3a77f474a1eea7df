#include "hinf/matrix_equations.hpp"

#include <Eigen/Eigenvalues>

namespace hinf {

template <class Scalar>
std::vector<std::pair<int, int>> schur_blocks(const Mat<Scalar>& T) {
  std::vector<std::pair<int, int>> blocks;
  const int n = static_cast<int>(T.rows());
  for (int k = 0; k < n;) {
    const int size = (k + 1 < n && T(k + 1, k) != Scalar(0)) ? 2 : 1;
    blocks.emplace_back(k, size);
    k += size;
  }
  return blocks;
}

namespace {

// Small dense solve of A X + X B = C through the Kronecker form.
template <class Scalar>
Mat<Scalar> kron_sylvester(const Mat<Scalar>& A, const Mat<Scalar>& B, const Mat<Scalar>& C,
                           Scalar sep_tol) {
  const int p = static_cast<int>(A.rows()), q = static_cast<int>(B.rows());
  Mat<Scalar> K = Mat<Scalar>::Zero(p * q, p * q);
  for (int j = 0; j < q; ++j) {
    K.block(j * p, j * p, p, p) += A;
    for (int l = 0; l < q; ++l) K.block(j * p, l * p, p, p).diagonal().array() += B(l, j);
  }
  Eigen::FullPivLU<Mat<Scalar>> lu(K);
  const Scalar pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(pivot > sep_tol)) throw Error(Errc::SpectraOverlap, "Sylvester operator is singular");
  Vec<Scalar> x = lu.solve(Eigen::Map<const Vec<Scalar>>(C.data(), p * q));
  return Eigen::Map<Mat<Scalar>>(x.data(), p, q);
}

}  // namespace

template <class Scalar>
void swap_schur_blocks(Mat<Scalar>& T, Mat<Scalar>& U, int k, int p1, int p2) {
  const int s = p1 + p2;
  const Mat<Scalar> A11 = T.block(k, k, p1, p1);
  const Mat<Scalar> A12 = T.block(k, k + p1, p1, p2);
  const Mat<Scalar> A22 = T.block(k + p1, k + p1, p2, p2);
  const Scalar scale = std::max({Scalar(1), A11.norm(), A22.norm()});
  // A11 X - X A22 = A12, then [-X; I] spans the A22-invariant subspace.
  const Mat<Scalar> X = kron_sylvester<Scalar>(
      A11, Mat<Scalar>(-A22), A12, std::numeric_limits<Scalar>::epsilon() * scale);
  Mat<Scalar> G(s, p2);
  G.topRows(p1) = -X;
  G.bottomRows(p2).setIdentity();
  Eigen::HouseholderQR<Mat<Scalar>> qr(G);
  const Mat<Scalar> Q = qr.householderQ();
  T.middleCols(k, s) = T.middleCols(k, s) * Q;
  T.middleRows(k, s) = Q.transpose() * T.middleRows(k, s);
  U.middleCols(k, s) = U.middleCols(k, s) * Q;
  T.block(k + p2, k, p1, p2).setZero();
}

template <class Scalar>
Mat<Scalar> solve_sylvester(const Mat<Scalar>& A, const Mat<Scalar>& B, const Mat<Scalar>& C) {
  const int p = static_cast<int>(A.rows()), q = static_cast<int>(B.rows());
  if (p == 0 || q == 0) return Mat<Scalar>::Zero(p, q);
  Eigen::RealSchur<Mat<Scalar>> sa(A), sb(B);
  const Mat<Scalar>& TA = sa.matrixT();
  const Mat<Scalar>& TB = sb.matrixT();
  const Mat<Scalar> Cp = sa.matrixU().transpose() * C * sb.matrixU();
  const auto ba = schur_blocks(TA);
  const auto bb = schur_blocks(TB);
  const Scalar sep_tol = Scalar(std::max(p, q)) * std::numeric_limits<Scalar>::epsilon() *
                         Scalar(1e3) * std::max({Scalar(1), TA.norm(), TB.norm()});

  Mat<Scalar> Y = Mat<Scalar>::Zero(p, q);
  for (const auto& [j0, qj] : bb) {
    for (auto it = ba.rbegin(); it != ba.rend(); ++it) {
      const auto [i0, pi] = *it;
      Mat<Scalar> rhs = Cp.block(i0, j0, pi, qj);
      const int below = p - (i0 + pi);
      if (below > 0)
        rhs -= TA.block(i0, i0 + pi, pi, below) * Y.block(i0 + pi, j0, below, qj);
      if (j0 > 0) rhs -= Y.block(i0, 0, pi, j0) * TB.block(0, j0, j0, qj);
      Y.block(i0, j0, pi, qj) = kron_sylvester<Scalar>(Mat<Scalar>(TA.block(i0, i0, pi, pi)),
                                                       Mat<Scalar>(TB.block(j0, j0, qj, qj)),
                                                       rhs, sep_tol);
    }
  }
  return sa.matrixU() * Y * sb.matrixU().transpose();
}

template <class Scalar>
Mat<Scalar> solve_lyapunov(const Mat<Scalar>& M, const Mat<Scalar>& Q, const Tolerances<Scalar>& tol) {
  const int n = static_cast<int>(M.rows());
  if (n == 0) return Mat<Scalar>(0, 0);
  if (Q.rows() != n || Q.cols() != n) throw Error(Errc::InvalidPlant, "Lyapunov size mismatch");
  Eigen::EigenSolver<Mat<Scalar>> es(M, false);
  const Scalar max_re = es.eigenvalues().real().maxCoeff();
  const Scalar tau = tol.axis(spectral_norm(M));
  if (max_re > tau) throw Error(Errc::NotHurwitz, "Lyapunov matrix is not Hurwitz");
  if (max_re >= -tau) throw Error(Errc::IllConditioned, "Lyapunov matrix has an eigenvalue on the axis");
  const Mat<Scalar> X = solve_sylvester<Scalar>(M.transpose(), M, -Q);
  return sym(X);
}

namespace {

template <class Scalar>
Eigen::SelfAdjointEigenSolver<Mat<Scalar>> checked_eig(const Mat<Scalar>& P) {
  const Scalar scale = std::max(Scalar(1), P.norm());
  if ((P - P.transpose()).norm() > Scalar(1e-10) * scale)
    throw Error(Errc::NotPSD, "matrix is not symmetric");
  return Eigen::SelfAdjointEigenSolver<Mat<Scalar>>(sym<Scalar>(P));
}

template <class Scalar>
Scalar pd_threshold(const Mat<Scalar>& P, const Tolerances<Scalar>& tol) {
  return tol.pd_rel * std::abs(P.trace()) / Scalar(P.rows());
}

}  // namespace

template <class Scalar>
Mat<Scalar> sym_sqrt(const Mat<Scalar>& P, const Tolerances<Scalar>& tol) {
  if (P.size() == 0) return P;
  auto es = checked_eig(P);
  Vec<Scalar> ev = es.eigenvalues();
  if (ev.minCoeff() < -pd_threshold(P, tol)) throw Error(Errc::NotPSD, "matrix is indefinite");
  ev = ev.cwiseMax(Scalar(0)).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

template <class Scalar>
Mat<Scalar> inv_sqrt(const Mat<Scalar>& P, const Tolerances<Scalar>& tol) {
  if (P.size() == 0) return P;
  auto es = checked_eig(P);
  const Vec<Scalar>& ev = es.eigenvalues();
  if (!(ev.minCoeff() > pd_threshold(P, tol)))
    throw Error(Errc::NotPD, "matrix is not positive definite");
  const Vec<Scalar> d = ev.cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

#define HINF_INSTANTIATE(S)                                                                    \
  template std::vector<std::pair<int, int>> schur_blocks(const Mat<S>&);                       \
  template void swap_schur_blocks(Mat<S>&, Mat<S>&, int, int, int);                            \
  template Mat<S> solve_sylvester(const Mat<S>&, const Mat<S>&, const Mat<S>&);                \
  template Mat<S> solve_lyapunov(const Mat<S>&, const Mat<S>&, const Tolerances<S>&);          \
  template Mat<S> sym_sqrt(const Mat<S>&, const Tolerances<S>&);                                \
  template Mat<S> inv_sqrt(const Mat<S>&, const Tolerances<S>&);

HINF_INSTANTIATE(double)
HINF_INSTANTIATE(long double)

}  // namespace hinf
