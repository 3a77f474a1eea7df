#include "hinf/plant.hpp"

#include <Eigen/Eigenvalues>

namespace hinf {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidPlant: return "InvalidPlant";
    case Errc::ParseError: return "ParseError";
    case Errc::SingularResolvent: return "SingularResolvent";
    case Errc::DegenerateRealization: return "DegenerateRealization";
    case Errc::IdenticallyZeroChannel: return "IdenticallyZeroChannel";
    case Errc::NullspaceExtractionFailure: return "NullspaceExtractionFailure";
    case Errc::NotHurwitz: return "NotHurwitz";
    case Errc::IllConditioned: return "IllConditioned";
    case Errc::SpectraOverlap: return "SpectraOverlap";
    case Errc::NotPSD: return "NotPSD";
    case Errc::NotPD: return "NotPD";
    case Errc::NullVectorDegenerate: return "NullVectorDegenerate";
    case Errc::NotStabilizable: return "NotStabilizable";
    case Errc::NotDetectable: return "NotDetectable";
    case Errc::Unsupported: return "Unsupported";
    case Errc::DegenerateChannel: return "DegenerateChannel";
    case Errc::MaxIter: return "MaxIter";
    case Errc::NearSingular: return "NearSingular";
    case Errc::OracleInconclusive: return "OracleInconclusive";
    case Errc::StructureMismatch: return "StructureMismatch";
    case Errc::HypothesisViolated: return "HypothesisViolated";
    case Errc::Inconclusive: return "Inconclusive";
  }
  return "Unknown";
}

std::string_view to_string(Channel ch) {
  switch (ch) {
    case Channel::ZW: return "ZW";
    case Channel::ZU: return "ZU";
    case Channel::YW: return "YW";
    case Channel::YU: return "YU";
  }
  return "?";
}

template <class Scalar>
void StateSpacePlant<Scalar>::validate() const {
  auto bad = [](const std::string& msg) { throw Error(Errc::InvalidPlant, msg); };
  if (n < 0) bad("negative state dimension");
  if (A.rows() != n || A.cols() != n) bad("A must be n x n");
  for (const auto* v : {&b1, &b2, &c1, &c2})
    if (v->size() != n) bad("b1, b2, c1, c2 must have length n");
  auto finite = [](const auto& m) { return m.allFinite(); };
  if (!finite(A) || !finite(b1) || !finite(b2) || !finite(c1) || !finite(c2) ||
      !std::isfinite(static_cast<double>(d11)) || !std::isfinite(static_cast<double>(d12)) ||
      !std::isfinite(static_cast<double>(d21)))
    bad("plant has non-finite entries");
}

template <class Scalar>
Realization<Scalar> channel_realization(const StateSpacePlant<Scalar>& p, Channel ch) {
  switch (ch) {
    case Channel::ZW: return {p.A, p.b1, p.c1, p.d11};
    case Channel::ZU: return {p.A, p.b2, p.c1, p.d12};
    case Channel::YW: return {p.A.transpose(), p.c2, p.b1, p.d21};
    case Channel::YU: return {p.A, p.b2, p.c2, Scalar(0)};
  }
  return {};
}

template <class Scalar>
std::complex<Scalar> transfer_eval(const Realization<Scalar>& r, std::complex<Scalar> s) {
  using C = std::complex<Scalar>;
  const int n = r.n();
  if (n == 0) return {r.d, Scalar(0)};
  CMat<Scalar> R = -r.A.template cast<C>();
  R.diagonal().array() += s;
  Eigen::JacobiSVD<CMat<Scalar>> svd(R);
  const auto& sv = svd.singularValues();
  const Scalar cond_max = Scalar(1) / std::sqrt(std::numeric_limits<Scalar>::epsilon());
  if (!(sv(n - 1) > Scalar(0)) || sv(0) / sv(n - 1) > cond_max)
    throw Error(Errc::SingularResolvent, "sI - A is singular within tolerance");
  CVec<Scalar> x = R.partialPivLu().solve(r.b.template cast<C>());
  return r.c.template cast<C>().dot(x) + C(r.d);
}

namespace {

// rank [A - sI, b] == n at every eigenvalue s of A with Re(s) >= -tau_axis.
template <class Scalar>
bool pbh_full_rank(const Mat<Scalar>& A, const Vec<Scalar>& b, const Tolerances<Scalar>& tol) {
  using C = std::complex<Scalar>;
  const int n = static_cast<int>(A.rows());
  if (n == 0) return true;
  const Scalar na = spectral_norm(A);
  Eigen::EigenSolver<Mat<Scalar>> es(A, false);
  for (int i = 0; i < n; ++i) {
    const C s = es.eigenvalues()(i);
    if (s.real() < -tol.axis(na)) continue;
    CMat<Scalar> M(n, n + 1);
    M.leftCols(n) = A.template cast<C>();
    M.leftCols(n).diagonal().array() -= s;
    M.col(n) = b.template cast<C>();
    Eigen::JacobiSVD<CMat<Scalar>> svd(M);
    const auto& sv = svd.singularValues();
    const Scalar scale = std::max(Scalar(1), sv(0));
    if (sv(n - 1) <= tol.rank(n, scale)) return false;
  }
  return true;
}

}  // namespace

template <class Scalar>
bool check_stabilizable(const Mat<Scalar>& A, const Vec<Scalar>& b, const Tolerances<Scalar>& tol) {
  return pbh_full_rank<Scalar>(A, b, tol);
}

template <class Scalar>
bool check_detectable(const Mat<Scalar>& A, const Vec<Scalar>& c, const Tolerances<Scalar>& tol) {
  return pbh_full_rank<Scalar>(A.transpose(), c, tol);
}

template <class Scalar>
Realization<Scalar> tf_realization(const std::vector<Scalar>& num, const std::vector<Scalar>& den) {
  if (den.empty() || den.front() == Scalar(0) || num.size() > den.size())
    throw Error(Errc::InvalidPlant, "tf_realization needs a proper rational function");
  const int n = static_cast<int>(den.size()) - 1;
  std::vector<Scalar> a(den.size()), q(den.size(), Scalar(0));
  for (std::size_t i = 0; i < den.size(); ++i) a[i] = den[i] / den.front();
  const std::size_t off = den.size() - num.size();
  for (std::size_t i = 0; i < num.size(); ++i) q[off + i] = num[i] / den.front();
  // num = d * den + remainder, remainder has degree < n.
  const Scalar d = q[0];
  Realization<Scalar> r;
  r.A = Mat<Scalar>::Zero(n, n);
  r.b = Vec<Scalar>::Zero(n);
  r.c = Vec<Scalar>::Zero(n);
  r.d = d;
  if (n == 0) return r;
  for (int i = 0; i + 1 < n; ++i) r.A(i, i + 1) = Scalar(1);
  for (int j = 0; j < n; ++j) r.A(n - 1, j) = -a[n - j];
  r.b(n - 1) = Scalar(1);
  for (int j = 0; j < n; ++j) r.c(j) = q[n - j] - d * a[n - j];
  return r;
}

template <class Scalar>
std::vector<Scalar> poly_from_roots(const std::vector<std::complex<Scalar>>& roots) {
  std::vector<std::complex<Scalar>> p{std::complex<Scalar>(1)};
  for (const auto& z : roots) {
    std::vector<std::complex<Scalar>> next(p.size() + 1, std::complex<Scalar>(0));
    for (std::size_t i = 0; i < p.size(); ++i) {
      next[i] += p[i];
      next[i + 1] -= z * p[i];
    }
    p.swap(next);
  }
  std::vector<Scalar> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i].real();
  return out;
}

#define HINF_INSTANTIATE(S)                                                                   \
  template struct StateSpacePlant<S>;                                                         \
  template Realization<S> channel_realization(const StateSpacePlant<S>&, Channel);            \
  template std::complex<S> transfer_eval(const Realization<S>&, std::complex<S>);             \
  template bool check_stabilizable(const Mat<S>&, const Vec<S>&, const Tolerances<S>&);       \
  template bool check_detectable(const Mat<S>&, const Vec<S>&, const Tolerances<S>&);         \
  template Realization<S> tf_realization(const std::vector<S>&, const std::vector<S>&);       \
  template std::vector<S> poly_from_roots(const std::vector<std::complex<S>>&);

HINF_INSTANTIATE(double)
HINF_INSTANTIATE(long double)

}  // namespace hinf
