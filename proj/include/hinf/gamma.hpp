#pragma once

#include "hinf/gramians.hpp"

#include <optional>

namespace hinf {

enum class GammaCase { Case1, Case2, Case3, Case4, ZwFallback };

std::string_view to_string(GammaCase c);

/// One imaginary-axis term |s^T b1 / f + d11| (ZU) or |t^T c1 / g + d11| (YW).
template <class Scalar>
struct ImagTerm {
  std::complex<Scalar> lambda;
  Scalar value = Scalar(0);
  std::optional<Scalar> transfer_check;  ///< |G_zw(lambda)| when lambda is not a pole
};

template <class Scalar>
struct GammaDiagnostics {
  Scalar residual_zu = Scalar(0);
  Scalar residual_yw = Scalar(0);
  Scalar cond_S = Scalar(1);
  Scalar cond_T = Scalar(1);
  Scalar lyapunov_residual = Scalar(0);
  bool short_circuit = false;  ///< h1, h2 and J vanish so hat_gamma = 0
  std::vector<std::string> warnings;
};

template <class Scalar>
struct GammaResult {
  Scalar gamma_star = Scalar(0);
  GammaCase case_id = GammaCase::Case1;
  Scalar hat_gamma = Scalar(0);
  std::vector<ImagTerm<Scalar>> imag_terms_zu, imag_terms_yw;
  std::optional<Scalar> feedthrough_term;
  GammaDiagnostics<Scalar> diagnostics;
  ZeroData<Scalar> zu, yw;
  GramianSet<Scalar> gramians;
  Mat<Scalar> E;
};

/// E with block rows of sizes (k1, k2, k1, k2):
///   [ 0            F^-1/2 J^T G^-1/2  F^-1/2 H1^1/2  0             ]
///   [ G^-1/2 J F^-1/2   0             0              G^-1/2 H2^1/2 ]
///   [ H1^1/2 F^-1/2     0             0              0             ]
///   [ 0            H2^1/2 G^-1/2      0              0             ]
template <class Scalar>
Mat<Scalar> build_E(const GramianSet<Scalar>& g, const Tolerances<Scalar>& tol = {});

/// max(0, lambda_max(E)); 0 for the empty matrix.
template <class Scalar>
Scalar hat_gamma(const Mat<Scalar>& E);

template <class Scalar>
std::pair<std::vector<ImagTerm<Scalar>>, std::vector<ImagTerm<Scalar>>> imag_corrections(
    const std::vector<ImagPair<Scalar>>& zu_pairs, const std::vector<ImagPair<Scalar>>& yw_pairs,
    const StateSpacePlant<Scalar>& plant, const Tolerances<Scalar>& tol = {});

template <class Scalar>
GammaResult<Scalar> gamma_star(const StateSpacePlant<Scalar>& plant, const Tolerances<Scalar>& tol = {});

/// Frequency grid for hinf_norm_grid, scaled by max(1, ||A||_2).
struct GridSpec {
  double lo = 1e-4;
  double hi = 1e4;
  int points = 400;
};

/// max |G(jw)| over a log grid plus w = 0 and w = inf, refined by golden
/// section around the best grid point.
template <class Scalar>
Scalar hinf_norm_grid(const Realization<Scalar>& r, const GridSpec& grid = {});

/// Plant x' = A x + b u, z = c^T x + w, y = c^T x + w.
template <class Scalar>
StateSpacePlant<Scalar> sensitivity_plant(const Mat<Scalar>& A, const Vec<Scalar>& b, const Vec<Scalar>& c);

/// max{1, sqrt(1 + sigma_max^2(G^-1/2 J F^-1/2))} for the sensitivity plant.
template <class Scalar>
Scalar sensitivity_limit(const Mat<Scalar>& A, const Vec<Scalar>& b, const Vec<Scalar>& c,
                         const Tolerances<Scalar>& tol = {});

}  // namespace hinf
