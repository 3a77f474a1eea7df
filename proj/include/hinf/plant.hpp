#pragma once

#include "hinf/core.hpp"

#include <vector>

namespace hinf {

/// SISO realization (A, b, c, d) with G(s) = c^T (sI - A)^{-1} b + d.
template <class Scalar>
struct Realization {
  Mat<Scalar> A;
  Vec<Scalar> b;
  Vec<Scalar> c;
  Scalar d = Scalar(0);

  int n() const { return static_cast<int>(A.rows()); }
  /// (A^T, c, b, d): same transfer function, roles of b and c exchanged.
  Realization dual() const { return {A.transpose(), c, b, d}; }
};

/// Generalized plant
///   x' = A x + b1 w + b2 u,  z = c1^T x + d11 w + d12 u,  y = c2^T x + d21 w.
template <class Scalar>
struct StateSpacePlant {
  int n = 0;
  Mat<Scalar> A;
  Vec<Scalar> b1, b2, c1, c2;
  Scalar d11 = Scalar(0), d12 = Scalar(0), d21 = Scalar(0);

  /// Throws Errc::InvalidPlant on inconsistent sizes or non-finite entries.
  void validate() const;

  template <class Other>
  StateSpacePlant<Other> cast() const {
    return {n,
            A.template cast<Other>(),
            b1.template cast<Other>(),
            b2.template cast<Other>(),
            c1.template cast<Other>(),
            c2.template cast<Other>(),
            Other(d11),
            Other(d12),
            Other(d21)};
  }
};

enum class Channel { ZW, ZU, YW, YU };

std::string_view to_string(Channel ch);

/// Tag for evaluating a transfer function at s = infinity.
struct Infinity {};
inline constexpr Infinity infinity{};

/// ZW = (A, b1, c1, d11), ZU = (A, b2, c1, d12), YW = (A^T, c2, b1, d21),
/// YU = (A, b2, c2, 0). YW is stored transposed, as the zero analysis uses it.
template <class Scalar>
Realization<Scalar> channel_realization(const StateSpacePlant<Scalar>& plant, Channel ch);

/// c^T (sI - A)^{-1} b + d. Throws SingularResolvent when cond(sI - A)
/// exceeds 1/sqrt(eps).
template <class Scalar>
std::complex<Scalar> transfer_eval(const Realization<Scalar>& r, std::complex<Scalar> s);

template <class Scalar>
std::complex<Scalar> transfer_eval(const Realization<Scalar>& r, Infinity) {
  return {r.d, Scalar(0)};
}

/// PBH test at every eigenvalue with Re >= -tau_axis.
template <class Scalar>
bool check_stabilizable(const Mat<Scalar>& A, const Vec<Scalar>& b,
                        const Tolerances<Scalar>& tol = {});

template <class Scalar>
bool check_detectable(const Mat<Scalar>& A, const Vec<Scalar>& c,
                      const Tolerances<Scalar>& tol = {});

/// Controllable canonical realization of num(s)/den(s). Coefficients are in
/// descending powers; den must be monic-normalizable and deg num <= deg den.
template <class Scalar>
Realization<Scalar> tf_realization(const std::vector<Scalar>& num,
                                   const std::vector<Scalar>& den);

/// Monic polynomial coefficients (descending) with the given roots.
template <class Scalar>
std::vector<Scalar> poly_from_roots(const std::vector<std::complex<Scalar>>& roots);

}  // namespace hinf
