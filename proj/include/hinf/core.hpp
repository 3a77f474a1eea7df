#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hinf {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using CMat = Mat<std::complex<Scalar>>;
template <class Scalar>
using CVec = Vec<std::complex<Scalar>>;

/// Every failure the library reports. The CLI maps these names to JSON.
enum class Errc {
  InvalidPlant,
  ParseError,
  SingularResolvent,
  DegenerateRealization,
  IdenticallyZeroChannel,
  NullspaceExtractionFailure,
  NotHurwitz,
  IllConditioned,
  SpectraOverlap,
  NotPSD,
  NotPD,
  NullVectorDegenerate,
  NotStabilizable,
  NotDetectable,
  Unsupported,
  DegenerateChannel,
  MaxIter,
  NearSingular,
  OracleInconclusive,
  StructureMismatch,
  HypothesisViolated,
  Inconclusive,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Numerical thresholds shared by all modules. The relative factors are
/// scaled by max(1, ||A||_2) of the realization at hand.
template <class Scalar>
struct Tolerances {
  Scalar axis_rel = Scalar(1e-8);
  Scalar cluster_rel = Scalar(1e-7);
  Scalar rank_factor = Scalar(1e3);
  Scalar pd_rel = Scalar(1e-10);
  Scalar residual_rel = Scalar(1e-8);

  Scalar axis(Scalar norm_a) const { return axis_rel * std::max(Scalar(1), norm_a); }
  Scalar cluster(Scalar norm_a) const {
    return cluster_rel * std::max(Scalar(1), norm_a);
  }
  /// Singular-value threshold n * ||M||_2 * eps * rank_factor.
  Scalar rank(int n, Scalar norm_m) const {
    return Scalar(std::max(n, 1)) * norm_m * std::numeric_limits<Scalar>::epsilon() *
           rank_factor;
  }
};

template <class Derived>
typename Derived::RealScalar spectral_norm(const Eigen::MatrixBase<Derived>& m) {
  using R = typename Derived::RealScalar;
  if (m.size() == 0) return R(0);
  Eigen::JacobiSVD<typename Derived::PlainObject> svd(m);
  return svd.singularValues()(0);
}

template <class Scalar>
Mat<Scalar> sym(const Mat<Scalar>& m) {
  return (m + m.transpose()) / Scalar(2);
}

/// He(M) = M + M^T.
template <class Scalar>
Mat<Scalar> he(const Mat<Scalar>& m) {
  return m + m.transpose();
}

}  // namespace hinf
