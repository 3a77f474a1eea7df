#include "hinf/gamma.hpp"

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

namespace hinf {

std::string_view to_string(GammaCase c) {
  switch (c) {
    case GammaCase::Case1: return "Case1";
    case GammaCase::Case2: return "Case2";
    case GammaCase::Case3: return "Case3";
    case GammaCase::Case4: return "Case4";
    case GammaCase::ZwFallback: return "ZwFallback";
  }
  return "?";
}

namespace {

template <class Scalar>
Mat<Scalar> checked_inv_sqrt(const Mat<Scalar>& P, const Tolerances<Scalar>& tol) {
  try {
    return inv_sqrt(P, tol);
  } catch (const Error& e) {
    if (e.code() == Errc::NotPD) throw Error(Errc::IllConditioned, "Gramian is not positive definite");
    throw;
  }
}

}  // namespace

template <class Scalar>
Mat<Scalar> build_E(const GramianSet<Scalar>& g, const Tolerances<Scalar>& tol) {
  const int k1 = g.k1(), k2 = g.k2();
  Mat<Scalar> E = Mat<Scalar>::Zero(2 * (k1 + k2), 2 * (k1 + k2));
  if (k1 + k2 == 0) return E;
  const int o2 = k1, o3 = k1 + k2, o4 = 2 * k1 + k2;
  const Mat<Scalar> Fi = checked_inv_sqrt(g.F, tol);
  const Mat<Scalar> Gi = checked_inv_sqrt(g.G, tol);
  const Mat<Scalar> H1h = sym_sqrt(g.H1, tol);
  const Mat<Scalar> H2h = sym_sqrt(g.H2, tol);
  const Mat<Scalar> E12 = Fi * g.J.transpose() * Gi;
  const Mat<Scalar> E13 = Fi * H1h;
  const Mat<Scalar> E24 = Gi * H2h;
  E.block(0, o2, k1, k2) = E12;
  E.block(o2, 0, k2, k1) = E12.transpose();
  E.block(0, o3, k1, k1) = E13;
  E.block(o3, 0, k1, k1) = E13.transpose();
  E.block(o2, o4, k2, k2) = E24;
  E.block(o4, o2, k2, k2) = E24.transpose();
  return E;
}

template <class Scalar>
Scalar hat_gamma(const Mat<Scalar>& E) {
  if (E.size() == 0) return Scalar(0);
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(sym<Scalar>(E), Eigen::EigenvaluesOnly);
  return std::max(Scalar(0), es.eigenvalues().maxCoeff());
}

template <class Scalar>
std::pair<std::vector<ImagTerm<Scalar>>, std::vector<ImagTerm<Scalar>>> imag_corrections(
    const std::vector<ImagPair<Scalar>>& zu_pairs, const std::vector<ImagPair<Scalar>>& yw_pairs,
    const StateSpacePlant<Scalar>& plant, const Tolerances<Scalar>& tol) {
  using C = std::complex<Scalar>;
  const Realization<Scalar> zw = channel_realization(plant, Channel::ZW);
  auto terms = [&](const std::vector<ImagPair<Scalar>>& pairs, const Vec<Scalar>& v) {
    std::vector<ImagTerm<Scalar>> out;
    for (const auto& p : pairs) {
      const Scalar nrm = std::sqrt(p.s.squaredNorm() + std::norm(p.f));
      if (!(std::abs(p.f) > tol.pd_rel * nrm))
        throw Error(Errc::NullVectorDegenerate, "imaginary-axis null vector has zero last entry");
      const C proj = (p.s.transpose() * v.template cast<C>())(0);
      ImagTerm<Scalar> t{p.lambda, std::abs(proj / p.f + C(plant.d11)), std::nullopt};
      try {
        t.transfer_check = std::abs(transfer_eval(zw, p.lambda));
      } catch (const Error&) {
      }
      out.push_back(t);
    }
    return out;
  };
  return {terms(zu_pairs, plant.b1), terms(yw_pairs, plant.c1)};
}

template <class Scalar>
Scalar hinf_norm_grid(const Realization<Scalar>& r, const GridSpec& grid) {
  using C = std::complex<Scalar>;
  Scalar best = std::abs(r.d);
  if (r.n() == 0) return best;
  Eigen::EigenSolver<Mat<Scalar>> es(r.A, false);
  if (es.eigenvalues().real().maxCoeff() >= Scalar(0))
    spdlog::warn("hinf_norm_grid: A is not Hurwitz, returning the grid supremum");
  auto mag = [&](Scalar w) -> Scalar {
    try {
      return std::abs(transfer_eval(r, C(0, w)));
    } catch (const Error&) {
      return Scalar(0);
    }
  };
  best = std::max(best, mag(Scalar(0)));
  const Scalar scale = std::max(Scalar(1), spectral_norm(r.A));
  const Scalar llo = std::log(Scalar(grid.lo) * scale), lhi = std::log(Scalar(grid.hi) * scale);
  const int N = std::max(grid.points, 3);
  int arg = -1;
  Scalar grid_best = Scalar(-1);
  for (int i = 0; i < N; ++i) {
    const Scalar m = mag(std::exp(llo + (lhi - llo) * Scalar(i) / Scalar(N - 1)));
    if (m > grid_best) {
      grid_best = m;
      arg = i;
    }
  }
  best = std::max(best, grid_best);
  // Golden-section search in log frequency between the neighbours of the peak.
  const Scalar step = (lhi - llo) / Scalar(N - 1);
  Scalar a = llo + step * Scalar(std::max(arg - 1, 0));
  Scalar b = llo + step * Scalar(std::min(arg + 1, N - 1));
  const Scalar phi = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
  Scalar x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  Scalar f1 = mag(std::exp(x1)), f2 = mag(std::exp(x2));
  for (int it = 0; it < 100 && b - a > Scalar(1e-12); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = mag(std::exp(x2));
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = mag(std::exp(x1));
    }
  }
  return std::max({best, f1, f2});
}

template <class Scalar>
GammaResult<Scalar> gamma_star(const StateSpacePlant<Scalar>& plant, const Tolerances<Scalar>& tol) {
  plant.validate();
  if (!check_stabilizable(plant.A, plant.b2, tol))
    throw Error(Errc::NotStabilizable, "(A, b2) is not stabilizable");
  if (!check_detectable(plant.A, plant.c2, tol))
    throw Error(Errc::NotDetectable, "(A, c2^T) is not detectable");

  GammaResult<Scalar> res;
  const Realization<Scalar> zu = channel_realization(plant, Channel::ZU);
  const Realization<Scalar> yw = channel_realization(plant, Channel::YW);
  try {
    relative_degree(zu, tol);
    relative_degree(yw, tol);
  } catch (const Error& e) {
    if (e.code() != Errc::IdenticallyZeroChannel) throw;
    res.case_id = GammaCase::ZwFallback;
    res.gamma_star = hinf_norm_grid(channel_realization(plant, Channel::ZW));
    res.diagnostics.warnings.push_back("G_zu or G_yw is identically zero, gamma* = ||G_zw||_inf");
    spdlog::info("identically zero channel, using the H-infinity norm of G_zw");
    return res;
  }

  res.zu = zero_data(zu, tol);
  res.yw = zero_data(yw, tol);
  auto& dg = res.diagnostics;
  dg.residual_zu = res.zu.residual;
  dg.residual_yw = res.yw.residual;
  dg.cond_S = res.zu.cond_S;
  dg.cond_T = res.yw.cond_S;
  for (const auto& w : res.zu.warnings) dg.warnings.push_back("ZU: " + w);
  for (const auto& w : res.yw.warnings) dg.warnings.push_back("YW: " + w);
  if (res.zu.unsupported_axis || res.yw.unsupported_axis)
    throw Error(Errc::Unsupported, "repeated imaginary-axis invariant zeros are not supported");

  res.gramians = build_gramians(res.zu, res.yw, plant, tol);
  const auto& g = res.gramians;
  dg.lyapunov_residual = g.residual;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar d11 = std::abs(plant.d11);
  const Scalar scale =
      std::max({Scalar(1), plant.b1.norm() + d11, plant.c1.norm() + d11});
  const Scalar thr = Scalar(100) * eps * scale;
  if (g.h1.norm() <= thr && g.h2.norm() <= thr && g.J.norm() <= Scalar(100) * eps) {
    dg.short_circuit = true;
    res.E = Mat<Scalar>::Zero(2 * (g.k1() + g.k2()), 2 * (g.k1() + g.k2()));
    res.hat_gamma = Scalar(0);
  } else {
    res.E = build_E(g, tol);
    res.hat_gamma = hat_gamma(res.E);
  }

  std::tie(res.imag_terms_zu, res.imag_terms_yw) =
      imag_corrections(res.zu.imag_pairs, res.yw.imag_pairs, plant, tol);
  const bool singular = plant.d12 * plant.d21 == Scalar(0);
  if (singular) res.feedthrough_term = d11;

  if (singular)
    res.case_id = GammaCase::Case4;
  else if (!res.zu.imag_pairs.empty() || !res.yw.imag_pairs.empty())
    res.case_id = GammaCase::Case3;
  else if (res.zu.k_minus() + res.yw.k_minus() > 0)
    res.case_id = GammaCase::Case2;
  else
    res.case_id = GammaCase::Case1;

  Scalar gs = res.hat_gamma;
  for (const auto& t : res.imag_terms_zu) gs = std::max(gs, t.value);
  for (const auto& t : res.imag_terms_yw) gs = std::max(gs, t.value);
  if (res.feedthrough_term) gs = std::max(gs, *res.feedthrough_term);
  res.gamma_star = gs;
  return res;
}

template <class Scalar>
StateSpacePlant<Scalar> sensitivity_plant(const Mat<Scalar>& A, const Vec<Scalar>& b, const Vec<Scalar>& c) {
  const int n = static_cast<int>(A.rows());
  return {n, A, Vec<Scalar>::Zero(n), b, c, c, Scalar(1), Scalar(0), Scalar(1)};
}

template <class Scalar>
Scalar sensitivity_limit(const Mat<Scalar>& A, const Vec<Scalar>& b, const Vec<Scalar>& c,
                         const Tolerances<Scalar>& tol) {
  const StateSpacePlant<Scalar> p = sensitivity_plant(A, b, c);
  p.validate();
  if (!check_stabilizable(A, b, tol)) throw Error(Errc::NotStabilizable, "(A, b) is not stabilizable");
  if (!check_detectable(A, c, tol)) throw Error(Errc::NotDetectable, "(A, c^T) is not detectable");
  const ZeroData<Scalar> zu = zero_data(channel_realization(p, Channel::ZU), tol);
  const ZeroData<Scalar> yw = zero_data(channel_realization(p, Channel::YW), tol);
  if (!zu.imag_pairs.empty() || !yw.imag_pairs.empty() || zu.unsupported_axis || yw.unsupported_axis)
    throw Error(Errc::Unsupported, "sensitivity limit requires no imaginary-axis zeros");
  const int k1 = zu.k_plus(), k2 = yw.k_plus();
  if (k1 == 0 || k2 == 0) return Scalar(1);
  const Mat<Scalar> F = solve_lyapunov(Mat<Scalar>(-zu.plus.Lambda), Mat<Scalar>(zu.plus.f * zu.plus.f.transpose()), tol);
  const Mat<Scalar> G = solve_lyapunov(Mat<Scalar>(-yw.plus.Lambda), Mat<Scalar>(yw.plus.f * yw.plus.f.transpose()), tol);
  const Mat<Scalar> J = yw.plus.S.transpose() * zu.plus.S;
  const Mat<Scalar> M = checked_inv_sqrt(G, tol) * J * checked_inv_sqrt(F, tol);
  const Scalar sigma = spectral_norm(M);
  return std::max(Scalar(1), std::sqrt(Scalar(1) + sigma * sigma));
}

#define HINF_INSTANTIATE(S)                                                                   \
  template Mat<S> build_E(const GramianSet<S>&, const Tolerances<S>&);                        \
  template S hat_gamma(const Mat<S>&);                                                        \
  template std::pair<std::vector<ImagTerm<S>>, std::vector<ImagTerm<S>>> imag_corrections(    \
      const std::vector<ImagPair<S>>&, const std::vector<ImagPair<S>>&,                       \
      const StateSpacePlant<S>&, const Tolerances<S>&);                                       \
  template GammaResult<S> gamma_star(const StateSpacePlant<S>&, const Tolerances<S>&);        \
  template S hinf_norm_grid(const Realization<S>&, const GridSpec&);                          \
  template StateSpacePlant<S> sensitivity_plant(const Mat<S>&, const Vec<S>&, const Vec<S>&); \
  template S sensitivity_limit(const Mat<S>&, const Vec<S>&, const Vec<S>&, const Tolerances<S>&);

HINF_INSTANTIATE(double)
HINF_INSTANTIATE(long double)

}  // namespace hinf
