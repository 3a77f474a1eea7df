#include "hinf/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <ostream>

namespace hinf {

std::string_view to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "Optimal";
    case SdpStatus::Infeasible: return "Infeasible";
    case SdpStatus::Unbounded: return "Unbounded";
    case SdpStatus::MaxIter: return "MaxIter";
    case SdpStatus::NearSingular: return "NearSingular";
  }
  return "?";
}

template <class Scalar>
int SdpProblem<Scalar>::dim() const {
  int n = 0;
  for (int b : block_sizes) n += b;
  return n;
}

template <class Scalar>
Blocks<Scalar> SdpProblem<Scalar>::slack(const Vec<Scalar>& x) const {
  Blocks<Scalar> out(block_sizes.size());
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    out[b] = -F[0][b];
    for (int i = 0; i < m(); ++i)
      if (x(i) != Scalar(0)) out[b] += x(i) * F[i + 1][b];
  }
  return out;
}

template <class Scalar>
Vec<Scalar> SdpProblem<Scalar>::apply_adjoint(const Blocks<Scalar>& Y) const {
  Vec<Scalar> v(m());
  for (int i = 0; i < m(); ++i) v(i) = inner(F[i + 1], Y);
  return v;
}

template <class Scalar>
void SdpProblem<Scalar>::validate() const {
  if (static_cast<int>(F.size()) != m() + 1)
    throw Error(Errc::InvalidPlant, "SDP needs m + 1 coefficient matrices");
  for (const auto& Fi : F) {
    if (Fi.size() != block_sizes.size()) throw Error(Errc::InvalidPlant, "SDP block count mismatch");
    for (std::size_t b = 0; b < Fi.size(); ++b) {
      const auto& M = Fi[b];
      if (M.rows() != block_sizes[b] || M.cols() != block_sizes[b])
        throw Error(Errc::InvalidPlant, "SDP block size mismatch");
      if ((M - M.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * std::max(Scalar(1), M.cwiseAbs().maxCoeff()))
        throw Error(Errc::InvalidPlant, "SDP coefficient matrix is not symmetric");
    }
  }
}

template <class Scalar>
Scalar inner(const Blocks<Scalar>& A, const Blocks<Scalar>& B) {
  Scalar s(0);
  for (std::size_t b = 0; b < A.size(); ++b) s += A[b].cwiseProduct(B[b]).sum();
  return s;
}

template <class Scalar>
Scalar min_eigenvalue(const Blocks<Scalar>& A) {
  Scalar m = std::numeric_limits<Scalar>::infinity();
  for (const auto& M : A) {
    if (M.size() == 0) continue;
    Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(sym<Scalar>(M), Eigen::EigenvaluesOnly);
    m = std::min(m, es.eigenvalues().minCoeff());
  }
  return m;
}

namespace {

template <class Scalar>
Scalar frob(const Blocks<Scalar>& A) {
  Scalar s(0);
  for (const auto& M : A) s += M.squaredNorm();
  return std::sqrt(s);
}

// Largest alpha with X + alpha dX >= 0 (infinity if unbounded).
template <class Scalar>
Scalar max_step(const Blocks<Scalar>& L, const Blocks<Scalar>& dX) {
  Scalar alpha = std::numeric_limits<Scalar>::infinity();
  for (std::size_t b = 0; b < L.size(); ++b) {
    if (L[b].size() == 0) continue;
    const auto Lt = L[b].template triangularView<Eigen::Lower>();
    Mat<Scalar> T = Lt.solve(dX[b]);
    Mat<Scalar> M = Lt.solve(Mat<Scalar>(T.transpose()));
    Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(sym<Scalar>(M), Eigen::EigenvaluesOnly);
    const Scalar lmin = es.eigenvalues().minCoeff();
    if (lmin < Scalar(0)) alpha = std::min(alpha, Scalar(-1) / lmin);
  }
  return alpha;
}

template <class Scalar>
bool cholesky(const Blocks<Scalar>& X, Blocks<Scalar>& L, Blocks<Scalar>& Xinv) {
  L.resize(X.size());
  Xinv.resize(X.size());
  for (std::size_t b = 0; b < X.size(); ++b) {
    const int k = static_cast<int>(X[b].rows());
    if (k == 0) {
      L[b] = X[b];
      Xinv[b] = X[b];
      continue;
    }
    Eigen::LLT<Mat<Scalar>> llt(sym<Scalar>(X[b]));
    if (llt.info() != Eigen::Success) return false;
    L[b] = llt.matrixL();
    Xinv[b] = llt.solve(Mat<Scalar>::Identity(k, k));
    Xinv[b] = sym<Scalar>(Xinv[b]);
  }
  return true;
}

}  // namespace

template <class Scalar>
SdpSolution<Scalar> sdp_solve(const SdpProblem<Scalar>& p, const SdpOptions& opts) {
  p.validate();
  for (int b : p.block_sizes)
    if (b > opts.block_cap) throw Error(Errc::Unsupported, "SDP block exceeds the size cap");
  const int m = p.m();
  const int nb = static_cast<int>(p.block_sizes.size());
  const Scalar N = Scalar(std::max(p.dim(), 1));
  const Scalar gap_tol(opts.gap_tol), feas_tol(opts.feas_tol);

  Scalar fmax = frob(p.F[0]);
  for (int i = 1; i <= m; ++i) fmax = std::max(fmax, frob(p.F[i]));
  const Scalar cnorm = p.c.size() ? p.c.template lpNorm<Eigen::Infinity>() : Scalar(0);
  const Scalar lam = Scalar(10) * std::max({Scalar(1), fmax, cnorm});

  SdpSolution<Scalar> sol;
  Vec<Scalar> x = Vec<Scalar>::Zero(m);
  Blocks<Scalar> X(nb), Y(nb);
  for (int b = 0; b < nb; ++b) {
    X[b] = lam * Mat<Scalar>::Identity(p.block_sizes[b], p.block_sizes[b]);
    Y[b] = X[b];
  }
  const Scalar f0n = frob(p.F[0]);
  const Scalar cn = p.c.norm();
  Blocks<Scalar> L, Xinv;

  auto finish = [&](SdpStatus st, int it) {
    sol.status = st;
    sol.x = x;
    sol.X = X;
    sol.Y = Y;
    sol.primal_objective = p.c.dot(x);
    sol.dual_objective = inner(p.F[0], Y);
    sol.gap = sol.primal_objective - sol.dual_objective;
    Blocks<Scalar> rp = p.slack(x);
    for (int b = 0; b < nb; ++b) rp[b] -= X[b];
    sol.primal_residual = frob(rp) / (Scalar(1) + f0n);
    sol.dual_residual = (p.c - p.apply_adjoint(Y)).norm() / (Scalar(1) + cn);
    sol.iterations = it;
    return sol;
  };

  for (int it = 0; it < opts.max_iter; ++it) {
    Blocks<Scalar> rp = p.slack(x);
    for (int b = 0; b < nb; ++b) rp[b] -= X[b];
    const Vec<Scalar> rd = p.c - p.apply_adjoint(Y);
    const Scalar pobj = p.c.dot(x), dobj = inner(p.F[0], Y);
    const Scalar mu = inner(X, Y) / N;
    const Scalar pinf = frob(rp) / (Scalar(1) + f0n);
    const Scalar dinf = rd.norm() / (Scalar(1) + cn);
    const Scalar rel_gap = std::abs(pobj - dobj) / std::max(Scalar(1), (std::abs(pobj) + std::abs(dobj)) / 2);
    spdlog::trace("sdp it {} pobj {} dobj {} pinf {} dinf {} mu {}", it, static_cast<double>(pobj),
                  static_cast<double>(dobj), static_cast<double>(pinf), static_cast<double>(dinf),
                  static_cast<double>(mu));
    if (rel_gap < gap_tol && pinf < feas_tol && dinf < feas_tol) return finish(SdpStatus::Optimal, it);

    // Divergence: a growing dual ray certifies primal infeasibility and a
    // growing primal ray certifies dual infeasibility.
    const Scalar ynorm = frob(Y), xnorm = x.norm();
    if (ynorm > Scalar(opts.divergence) * lam && dobj > Scalar(0) &&
        rd.norm() / dobj < Scalar(1e-6) * (Scalar(1) + cn))
      return finish(SdpStatus::Infeasible, it);
    if (xnorm > Scalar(opts.divergence) * lam && pobj < Scalar(0) &&
        frob(rp) / (-pobj) < Scalar(1e-6) * (Scalar(1) + f0n))
      return finish(SdpStatus::Unbounded, it);

    if (!cholesky(X, L, Xinv)) {
      spdlog::debug("sdp: primal iterate lost definiteness at iteration {}", it);
      return finish(SdpStatus::NearSingular, it);
    }

    // Schur complement B_ij = tr(F_i X^-1 F_j Y).
    std::vector<Blocks<Scalar>> G(m, Blocks<Scalar>(nb));
    for (int j = 0; j < m; ++j)
      for (int b = 0; b < nb; ++b) G[j][b] = Xinv[b] * p.F[j + 1][b] * Y[b];
    Mat<Scalar> B(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        Scalar s(0);
        for (int b = 0; b < nb; ++b) s += p.F[i + 1][b].cwiseProduct(G[j][b].transpose()).sum();
        B(i, j) = B(j, i) = s;
      }
    Eigen::LDLT<Mat<Scalar>> ldlt(B);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > Scalar(0))) {
      // Rounding can leave tiny negative pivots in the PSD Schur matrix.
      const Scalar reg = std::numeric_limits<Scalar>::epsilon() * Scalar(m) * B.diagonal().cwiseAbs().maxCoeff();
      B.diagonal().array() += reg;
      ldlt.compute(B);
      if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > Scalar(0))) {
        spdlog::debug("sdp: Schur complement is singular at iteration {}", it);
        return finish(SdpStatus::NearSingular, it);
      }
    }

    // Direction for the target R in X dY + dX Y = R.
    auto direction = [&](const Blocks<Scalar>& R, Vec<Scalar>& dx, Blocks<Scalar>& dX, Blocks<Scalar>& dY) {
      Blocks<Scalar> K(nb);
      for (int b = 0; b < nb; ++b) K[b] = Xinv[b] * (R[b] - rp[b] * Y[b]);
      Vec<Scalar> rhs(m);
      for (int i = 0; i < m; ++i) {
        Scalar s(0);
        for (int b = 0; b < nb; ++b) s += p.F[i + 1][b].cwiseProduct(K[b]).sum();
        rhs(i) = s - rd(i);
      }
      dx = ldlt.solve(rhs);
      dX = rp;
      for (int b = 0; b < nb; ++b)
        for (int j = 0; j < m; ++j)
          if (dx(j) != Scalar(0)) dX[b] += dx(j) * p.F[j + 1][b];
      dY.resize(nb);
      for (int b = 0; b < nb; ++b) dY[b] = sym<Scalar>(Mat<Scalar>(Xinv[b] * (R[b] - dX[b] * Y[b])));
    };

    Blocks<Scalar> R(nb);
    for (int b = 0; b < nb; ++b) R[b] = -X[b] * Y[b];
    Vec<Scalar> dx;
    Blocks<Scalar> dX, dY;
    direction(R, dx, dX, dY);
    Blocks<Scalar> LY;
    {
      Blocks<Scalar> tmp;
      if (!cholesky(Y, LY, tmp)) {
        spdlog::debug("sdp: dual iterate lost definiteness at iteration {}", it);
        return finish(SdpStatus::NearSingular, it);
      }
    }
    const Scalar ap = std::min(Scalar(1), max_step(L, dX));
    const Scalar ad = std::min(Scalar(1), max_step(LY, dY));
    Scalar mu_aff(0);
    for (int b = 0; b < nb; ++b)
      mu_aff += (X[b] + ap * dX[b]).cwiseProduct(Y[b] + ad * dY[b]).sum();
    mu_aff /= N;
    Scalar sigma = mu > Scalar(0) ? std::pow(std::max(Scalar(0), mu_aff) / mu, 3) : Scalar(0);
    sigma = std::min(Scalar(1), sigma);

    for (int b = 0; b < nb; ++b) {
      R[b] = -X[b] * Y[b] - dX[b] * dY[b];
      R[b].diagonal().array() += sigma * mu;
    }
    direction(R, dx, dX, dY);
    const Scalar tau(opts.step);
    const Scalar alpha_p = std::min(Scalar(1), tau * max_step(L, dX));
    const Scalar alpha_d = std::min(Scalar(1), tau * max_step(LY, dY));
    spdlog::trace("sdp step sigma {} alpha_p {} alpha_d {}", static_cast<double>(sigma),
                  static_cast<double>(alpha_p), static_cast<double>(alpha_d));
    x += alpha_p * dx;
    for (int b = 0; b < nb; ++b) {
      X[b] = sym<Scalar>(Mat<Scalar>(X[b] + alpha_p * dX[b]));
      Y[b] = sym<Scalar>(Mat<Scalar>(Y[b] + alpha_d * dY[b]));
    }
  }
  return finish(SdpStatus::MaxIter, opts.max_iter);
}

template <class Scalar>
void write_sdpa(std::ostream& os, const SdpProblem<Scalar>& p) {
  os.precision(17);
  os << p.m() << "\n" << p.block_sizes.size() << "\n";
  for (std::size_t b = 0; b < p.block_sizes.size(); ++b) os << (b ? " " : "") << p.block_sizes[b];
  os << "\n";
  for (int i = 0; i < p.m(); ++i) os << (i ? " " : "") << static_cast<double>(p.c(i));
  os << "\n";
  for (int k = 0; k <= p.m(); ++k)
    for (std::size_t b = 0; b < p.block_sizes.size(); ++b) {
      const auto& M = p.F[k][b];
      for (int i = 0; i < M.rows(); ++i)
        for (int j = i; j < M.cols(); ++j)
          if (M(i, j) != Scalar(0))
            os << k << " " << b + 1 << " " << i + 1 << " " << j + 1 << " " << static_cast<double>(M(i, j)) << "\n";
    }
}

#define HINF_INSTANTIATE(S)                                                 \
  template struct SdpProblem<S>;                                            \
  template SdpSolution<S> sdp_solve(const SdpProblem<S>&, const SdpOptions&); \
  template void write_sdpa(std::ostream&, const SdpProblem<S>&);           \
  template S inner(const Blocks<S>&, const Blocks<S>&);                     \
  template S min_eigenvalue(const Blocks<S>&);

HINF_INSTANTIATE(double)
HINF_INSTANTIATE(long double)

}  // namespace hinf
