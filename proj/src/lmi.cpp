#include "hinf/lmi.hpp"

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <functional>

namespace hinf {

std::string_view to_string(PerpMode m) {
  return m == PerpMode::Generic ? "Generic" : "NullVector";
}

std::string_view to_string(ProbeOutcome o) {
  return o == ProbeOutcome::StrictlyFeasible ? "StrictlyFeasible" : "ReducingDirectionFound";
}

template <class Scalar>
Mat<Scalar> smat(const Vec<Scalar>& x, int offset, int n) {
  Mat<Scalar> X(n, n);
  int k = offset;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i, ++k) X(i, j) = X(j, i) = x(k);
  return X;
}

template <class Scalar>
Mat<Scalar> orth(const Mat<Scalar>& M, const Tolerances<Scalar>& tol) {
  if (M.cols() == 0 || M.rows() == 0) return Mat<Scalar>(M.rows(), 0);
  Eigen::JacobiSVD<Mat<Scalar>> svd(M, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const int n = static_cast<int>(std::max(M.rows(), M.cols()));
  int r = 0;
  while (r < sv.size() && sv(r) > tol.rank(n, sv(0))) ++r;
  return svd.matrixU().leftCols(r);
}

template <class Scalar>
Mat<Scalar> perp(const Vec<Scalar>& v) {
  const int n = static_cast<int>(v.size());
  Eigen::JacobiSVD<Mat<Scalar>> svd(Mat<Scalar>(v.transpose()), Eigen::ComputeFullV);
  return svd.matrixV().rightCols(n - 1);
}

namespace {

template <class Scalar>
using Affine = std::function<Blocks<Scalar>(const Vec<Scalar>&, bool)>;

// F_i = eval(e_i) without constants, F_0 = -eval(0) with constants.
template <class Scalar>
SdpProblem<Scalar> from_affine(int m, const Vec<Scalar>& c, const Affine<Scalar>& eval) {
  SdpProblem<Scalar> p;
  p.c = c;
  Blocks<Scalar> f0 = eval(Vec<Scalar>::Zero(m), true);
  for (const auto& b : f0) p.block_sizes.push_back(static_cast<int>(b.rows()));
  for (auto& b : f0) b = -b;
  p.F.push_back(std::move(f0));
  for (int i = 0; i < m; ++i) p.F.push_back(eval(Vec<Scalar>::Unit(m, i), false));
  return p;
}

template <class Scalar>
NullBlock<Scalar> stack_blocks(std::initializer_list<const NullBlock<Scalar>*> parts, int n) {
  int k = 0;
  for (const auto* p : parts) k += p->k();
  NullBlock<Scalar> out{Mat<Scalar>(n, k), Vec<Scalar>(k), Mat<Scalar>::Zero(k, k)};
  int o = 0;
  for (const auto* p : parts) {
    const int kk = p->k();
    if (kk == 0) continue;
    out.S.middleCols(o, kk) = p->S;
    out.f.segment(o, kk) = p->f;
    out.Lambda.block(o, o, kk, kk) = p->Lambda;
    o += kk;
  }
  return out;
}

template <class Scalar>
BlockPartition partition_of(const ZeroData<Scalar>& zd, bool with_axis, bool with_minus) {
  if (zd.unsupported_axis)
    throw Error(Errc::Unsupported, "repeated imaginary-axis zeros are not supported");
  BlockPartition p;
  if (with_axis) {
    p.axis = zd.axis.k();
    for (const auto& ip : zd.imag_pairs) p.axis_blocks.push_back(ip.real_zero ? 1 : 2);
  }
  if (with_minus) p.minus = zd.k_minus();
  p.plus = zd.k_plus();
  return p;
}

template <class Scalar>
NullBlock<Scalar> ordered(const ZeroData<Scalar>& zd, int n, bool with_axis, bool with_minus) {
  const NullBlock<Scalar> empty{Mat<Scalar>(n, 0), Vec<Scalar>(0), Mat<Scalar>(0, 0)};
  return stack_blocks<Scalar>(
      {with_axis ? &zd.axis : &empty, with_minus ? &zd.minus : &empty, &zd.plus}, n);
}

template <class Scalar>
Mat<Scalar> null_vector_basis(const ZeroData<Scalar>& zd, const NullBlock<Scalar>& s, int n,
                              const Tolerances<Scalar>& tol) {
  const int r = zd.relative_degree;
  const int k = s.k();
  if (k + r != n)
    throw Error(Errc::NullVectorDegenerate, "null vectors and infinite chain do not span n");
  Mat<Scalar> N = Mat<Scalar>::Zero(n + 2, n + 1);
  N.topLeftCorner(n, k) = s.S;
  N.block(n, 0, 1, k) = s.f.transpose();
  if (r > 0) {
    N.block(0, k, n, r) = zd.infinite.P;
    N.block(n, k, 1, r) = zd.infinite.p.transpose();
  }
  N(n + 1, n) = Scalar(1);
  Eigen::JacobiSVD<Mat<Scalar>> svd(N);
  const auto& sv = svd.singularValues();
  if (!(sv(n) > tol.rank(n + 2, sv(0)) * Scalar(1e3)))
    throw Error(Errc::NullVectorDegenerate, "null-vector basis is rank deficient");
  return N;
}

}  // namespace

template <class Scalar>
Lmi<Scalar> assemble_lmi_full(const StateSpacePlant<Scalar>& plant, std::optional<Scalar> gamma,
                              PerpMode mode, const Tolerances<Scalar>& tol) {
  plant.validate();
  const int n = plant.n;
  Vec<Scalar> v1(n + 2), v2(n + 2);
  v1 << plant.b2, plant.d12, Scalar(0);
  v2 << plant.c2, plant.d21, Scalar(0);
  if (v1.norm() == Scalar(0) || v2.norm() == Scalar(0))
    throw Error(Errc::DegenerateChannel, "b2, d12 or c2, d21 vanish; no perpendicular of rank n+1");

  Lmi<Scalar> lmi;
  lmi.form = LmiForm::Full;
  lmi.mode = mode;
  lmi.gamma = gamma;
  Mat<Scalar> N1, N2;
  if (mode == PerpMode::Generic) {
    N1 = perp<Scalar>(v1);
    N2 = perp<Scalar>(v2);
  } else {
    const auto zu = zero_data(channel_realization(plant, Channel::ZU), tol);
    const auto yw = zero_data(channel_realization(plant, Channel::YW), tol);
    const auto s = ordered(zu, n, true, true);
    const auto t = ordered(yw, n, true, true);
    N1 = null_vector_basis(zu, s, n, tol);
    N2 = null_vector_basis(yw, t, n, tol);
    lmi.z_part = partition_of(zu, true, true);
    lmi.z_part.infinite = zu.relative_degree;
    lmi.z_part.tail = 1;
    lmi.v_part = partition_of(yw, true, true);
    lmi.v_part.infinite = yw.relative_degree;
    lmi.v_part.tail = 1;
    lmi.Sx = s.S;
    lmi.Sy = t.S;
  }

  const int gi = gamma ? -1 : 0;
  lmi.x_offset = gamma ? 0 : 1;
  lmi.x_dim = n;
  lmi.y_offset = lmi.x_offset + svec_size(n);
  lmi.y_dim = n;
  const int m = lmi.y_offset + svec_size(n);
  lmi.block_names = {"Z", "V", "W"};

  const auto& A = plant.A;
  Affine<Scalar> eval = [&](const Vec<Scalar>& x, bool constant) {
    const Scalar g = gi >= 0 ? x(gi) : (constant ? *gamma : Scalar(0));
    const Mat<Scalar> X = smat(x, lmi.x_offset, n);
    const Mat<Scalar> Y = smat(x, lmi.y_offset, n);
    Mat<Scalar> M1 = Mat<Scalar>::Zero(n + 2, n + 2), M2 = Mat<Scalar>::Zero(n + 2, n + 2);
    M1.topLeftCorner(n, n) = A * X + X * A.transpose();
    M1.block(0, n, n, 1) = X * plant.c1;
    M1.block(n, 0, 1, n) = (X * plant.c1).transpose();
    M2.topLeftCorner(n, n) = Y * A + A.transpose() * Y;
    M2.block(0, n, n, 1) = Y * plant.b1;
    M2.block(n, 0, 1, n) = (Y * plant.b1).transpose();
    for (auto* M : {&M1, &M2}) M->bottomRightCorner(2, 2).diagonal().setConstant(-g);
    Mat<Scalar> W = Mat<Scalar>::Zero(2 * n, 2 * n);
    W.topLeftCorner(n, n) = X;
    W.bottomRightCorner(n, n) = Y;
    if (constant) {
      M1.block(0, n + 1, n, 1) = plant.b1;
      M1.block(n + 1, 0, 1, n) = plant.b1.transpose();
      M2.block(0, n + 1, n, 1) = plant.c1;
      M2.block(n + 1, 0, 1, n) = plant.c1.transpose();
      for (auto* M : {&M1, &M2}) (*M)(n, n + 1) = (*M)(n + 1, n) = plant.d11;
      W.topRightCorner(n, n) = -Mat<Scalar>::Identity(n, n);
      W.bottomLeftCorner(n, n) = -Mat<Scalar>::Identity(n, n);
    }
    return Blocks<Scalar>{sym<Scalar>(-N1.transpose() * M1 * N1), sym<Scalar>(-N2.transpose() * M2 * N2), W};
  };
  Vec<Scalar> c = Vec<Scalar>::Zero(m);
  if (gi >= 0) c(gi) = Scalar(1);
  lmi.sdp = from_affine<Scalar>(m, c, eval);
  return lmi;
}

template <class Scalar>
Lmi<Scalar> assemble_from_reduced(const ReducedData<Scalar>& d, std::optional<Scalar> gamma) {
  const int k1 = d.zu.k(), k2 = d.yw.k();
  Lmi<Scalar> lmi;
  lmi.form = LmiForm::Reduced;
  lmi.gamma = gamma;
  lmi.z_part = d.zu_part;
  lmi.z_part.tail = 1;
  lmi.v_part = d.yw_part;
  lmi.v_part.tail = 1;
  lmi.wx_part = d.zu_part;
  lmi.wy_part = d.yw_part;
  const int gi = gamma ? -1 : 0;
  lmi.x_offset = gamma ? 0 : 1;
  lmi.x_dim = k1;
  lmi.y_offset = lmi.x_offset + svec_size(k1);
  lmi.y_dim = k2;
  const int m = lmi.y_offset + svec_size(k2);
  lmi.block_names = {"Z", "V"};
  lmi.w_block = k1 + k2 > 0 ? 2 : -1;
  if (lmi.w_block >= 0) lmi.block_names.push_back("W");
  if (d.d11_block) lmi.block_names.push_back("d11");
  for (std::size_t j = 0; j < d.axis_bounds.size(); ++j)
    lmi.block_names.push_back("axis" + std::to_string(j));

  Affine<Scalar> eval = [&](const Vec<Scalar>& x, bool constant) {
    const Scalar g = gi >= 0 ? x(gi) : (constant ? *gamma : Scalar(0));
    const Mat<Scalar> X = smat(x, lmi.x_offset, k1);
    const Mat<Scalar> Y = smat(x, lmi.y_offset, k2);
    auto side = [&](const NullBlock<Scalar>& s, const Mat<Scalar>& Xh, const Vec<Scalar>& h) {
      const int k = s.k();
      Mat<Scalar> B(k + 1, k + 1);
      B.topLeftCorner(k, k) = he<Scalar>(s.Lambda.transpose() * Xh) - g * s.f * s.f.transpose();
      B.topRightCorner(k, 1) = constant ? h : Vec<Scalar>::Zero(k);
      B.bottomLeftCorner(1, k) = B.topRightCorner(k, 1).transpose();
      B(k, k) = -g;
      return Mat<Scalar>(-B);
    };
    Blocks<Scalar> out{side(d.zu, X, d.h1), side(d.yw, Y, d.h2)};
    if (k1 + k2 > 0) {
      Mat<Scalar> W = Mat<Scalar>::Zero(k1 + k2, k1 + k2);
      W.topLeftCorner(k1, k1) = X;
      W.bottomRightCorner(k2, k2) = Y;
      if (constant) {
        W.bottomLeftCorner(k2, k1) = -d.J;
        W.topRightCorner(k1, k2) = -d.J.transpose();
      }
      out.push_back(W);
    }
    auto pair_block = [&](Scalar off) {
      Mat<Scalar> B(2, 2);
      B << g, constant ? off : Scalar(0), constant ? off : Scalar(0), g;
      return B;
    };
    if (d.d11_block) out.push_back(pair_block(-*d.d11_block));
    for (const Scalar a : d.axis_bounds) out.push_back(pair_block(a));
    return out;
  };
  Vec<Scalar> c = Vec<Scalar>::Zero(m);
  if (gi >= 0) c(gi) = Scalar(1);
  lmi.sdp = from_affine<Scalar>(m, c, eval);
  return lmi;
}

namespace {

template <class Scalar>
ReducedData<Scalar> reduced_data(const StateSpacePlant<Scalar>& plant, const ZeroData<Scalar>& zu,
                                  const ZeroData<Scalar>& yw, bool with_axis, bool with_minus) {
  const int n = plant.n;
  ReducedData<Scalar> d;
  d.zu = ordered(zu, n, with_axis, with_minus);
  d.yw = ordered(yw, n, with_axis, with_minus);
  d.zu_part = partition_of(zu, with_axis, with_minus);
  d.yw_part = partition_of(yw, with_axis, with_minus);
  d.h1 = d.zu.S.transpose() * plant.b1 + plant.d11 * d.zu.f;
  d.h2 = d.yw.S.transpose() * plant.c1 + plant.d11 * d.yw.f;
  d.J = d.yw.S.transpose() * d.zu.S;
  return d;
}

}  // namespace

template <class Scalar>
Lmi<Scalar> assemble_lmi2(const StateSpacePlant<Scalar>& plant, const Tolerances<Scalar>& tol) {
  plant.validate();
  if (plant.d12 == Scalar(0) || plant.d21 == Scalar(0))
    throw Error(Errc::Unsupported, "the null-vector reduction needs d12 != 0 and d21 != 0");
  const auto zu = zero_data(channel_realization(plant, Channel::ZU), tol);
  const auto yw = zero_data(channel_realization(plant, Channel::YW), tol);
  return assemble_from_reduced(reduced_data(plant, zu, yw, true, true), std::optional<Scalar>{});
}

template <class Scalar>
Lmi<Scalar> assemble_reduced(const StateSpacePlant<Scalar>& plant, GammaCase gc,
                             const Tolerances<Scalar>& tol) {
  plant.validate();
  if (gc == GammaCase::ZwFallback)
    throw Error(Errc::Unsupported, "no reduced LMI when G_zu or G_yw vanishes");
  const auto zu = zero_data(channel_realization(plant, Channel::ZU), tol);
  const auto yw = zero_data(channel_realization(plant, Channel::YW), tol);
  switch (gc) {
    case GammaCase::Case1:
    case GammaCase::Case2:
      return assemble_from_reduced(reduced_data(plant, zu, yw, false, false), std::optional<Scalar>{});
    case GammaCase::Case3: {
      auto d = reduced_data(plant, zu, yw, false, true);
      const auto [tz, ty] = imag_corrections(zu.imag_pairs, yw.imag_pairs, plant, tol);
      for (const auto& t : tz) d.axis_bounds.push_back(t.value);
      for (const auto& t : ty) d.axis_bounds.push_back(t.value);
      return assemble_from_reduced(d, std::optional<Scalar>{});
    }
    case GammaCase::Case4: {
      auto d = reduced_data(plant, zu, yw, true, true);
      d.d11_block = plant.d11;
      return assemble_from_reduced(d, std::optional<Scalar>{});
    }
    case GammaCase::ZwFallback: break;
  }
  throw Error(Errc::Unsupported, "unknown case");
}

// ---------------------------------------------------------------------------
// Strict feasibility probes.

namespace {

template <class Scalar>
Scalar max_abs(const Blocks<Scalar>& B) {
  Scalar s(0);
  for (const auto& b : B)
    if (b.size() > 0) s = std::max(s, b.cwiseAbs().maxCoeff());
  return s;
}

template <class Scalar>
Blocks<Scalar> identity_blocks(const std::vector<int>& sizes) {
  Blocks<Scalar> out;
  for (int s : sizes) out.push_back(Mat<Scalar>::Identity(s, s));
  return out;
}

template <class Scalar>
Mat<Scalar> scalar_block(Scalar v) {
  return Mat<Scalar>::Constant(1, 1, v);
}

// max t s.t. sum x_i F_i - F_0 - t I >= 0, t <= 1, as min -t.
template <class Scalar>
SdpProblem<Scalar> primal_probe_problem(const SdpProblem<Scalar>& p) {
  const int m = p.m();
  SdpProblem<Scalar> q;
  q.block_sizes = p.block_sizes;
  q.block_sizes.push_back(1);
  q.c = Vec<Scalar>::Zero(m + 1);
  q.c(m) = Scalar(-1);
  for (int i = 0; i <= m; ++i) {
    Blocks<Scalar> b = p.F[i];
    b.push_back(scalar_block(i == 0 ? Scalar(-1) : Scalar(0)));
    q.F.push_back(std::move(b));
  }
  Blocks<Scalar> t = identity_blocks<Scalar>(p.block_sizes);
  for (auto& b : t) b = -b;
  t.push_back(scalar_block(Scalar(-1)));
  q.F.push_back(std::move(t));
  return q;
}

// Primal form of the dual min-eigenvalue problem: its dual is
// max t s.t. F_i . Y' = c_i, Y' >= t I, trace(Y') <= R.
template <class Scalar>
SdpProblem<Scalar> dual_probe_problem(const SdpProblem<Scalar>& p, Scalar R) {
  const int m = p.m();
  const int N = p.dim();
  SdpProblem<Scalar> q;
  q.block_sizes = p.block_sizes;
  q.block_sizes.push_back(1);
  q.block_sizes.push_back(1);
  q.c = Vec<Scalar>(m + 1);
  q.c.head(m) = p.c;
  q.c(m) = R;
  Blocks<Scalar> f0;
  for (int s : p.block_sizes) f0.push_back(Mat<Scalar>::Zero(s, s));
  f0.push_back(scalar_block(Scalar(1)));
  f0.push_back(scalar_block(Scalar(0)));
  q.F.push_back(std::move(f0));
  for (int i = 1; i <= m; ++i) {
    Blocks<Scalar> b = p.F[i];
    Scalar tr(0);
    for (const auto& blk : b) tr += blk.trace();
    b.push_back(scalar_block(tr));
    b.push_back(scalar_block(Scalar(0)));
    q.F.push_back(std::move(b));
  }
  Blocks<Scalar> t = identity_blocks<Scalar>(p.block_sizes);
  t.push_back(scalar_block(Scalar(N)));
  t.push_back(scalar_block(Scalar(1)));
  q.F.push_back(std::move(t));
  return q;
}

template <class Scalar>
Blocks<Scalar> combine(const SdpProblem<Scalar>& p, const Vec<Scalar>& y) {
  Blocks<Scalar> out;
  for (int s : p.block_sizes) out.push_back(Mat<Scalar>::Zero(s, s));
  for (int i = 1; i <= p.m(); ++i)
    for (std::size_t b = 0; b < out.size(); ++b) out[b] += y(i - 1) * p.F[i][b];
  return out;
}

}  // namespace

template <class Scalar>
ProbeResult<Scalar> strict_feasibility_probe(const SdpProblem<Scalar>& p, ProbeSide side,
                                             const ProbeOptions& opts) {
  p.validate();
  const int m = p.m();
  ProbeResult<Scalar> res;
  if (side == ProbeSide::Primal) {
    const Scalar scale = std::max(Scalar(1), max_abs(p.F[0]));
    const auto sol = sdp_solve(primal_probe_problem(p), opts.sdp);
    res.status = sol.status;
    if (sol.status == SdpStatus::Unbounded || sol.status == SdpStatus::Infeasible)
      throw Error(Errc::Inconclusive, "primal probe solver reported " + std::string(to_string(sol.status)));
    // Both outcomes are verified on the iterates, whatever the solver status.
    const Vec<Scalar> x = sol.x.head(m);
    const Scalar t = min_eigenvalue(p.slack(x));
    res.margin = t;
    if (t > Scalar(opts.feasible_margin) * scale) {
      res.outcome = ProbeOutcome::StrictlyFeasible;
      res.x = x;
      return res;
    }
    Blocks<Scalar> Y(sol.Y.begin(), sol.Y.end() - 1);
    Scalar tr(0);
    for (const auto& b : Y) tr += b.trace();
    if (tr > Scalar(0)) {
      for (auto& b : Y) b /= tr;
      Scalar fscale(1);
      for (int i = 1; i <= m; ++i) fscale = std::max(fscale, max_abs(p.F[i]));
      res.bound = -inner(p.F[0], Y);
      res.residual = m > 0 ? p.apply_adjoint(Y).cwiseAbs().maxCoeff() / fscale : Scalar(0);
      if (res.residual <= Scalar(opts.certificate_tol) && res.bound < Scalar(opts.reducing_margin) * scale) {
        res.outcome = ProbeOutcome::ReducingDirectionFound;
        res.Y = std::move(Y);
        return res;
      }
    }
    throw Error(Errc::Inconclusive, "primal probe margin " + std::to_string(static_cast<double>(t)) +
                                        " is between the thresholds");
  }

  const int N = p.dim();
  const Scalar R = Scalar(100) * Scalar(N) * (Scalar(1) + (m > 0 ? p.c.cwiseAbs().maxCoeff() : Scalar(0)));
  const Scalar scale = R / Scalar(N);
  const auto sol = sdp_solve(dual_probe_problem(p, R), opts.sdp);
  res.status = sol.status;
  if (sol.status == SdpStatus::Unbounded || sol.status == SdpStatus::Infeasible)
    throw Error(Errc::Inconclusive, "dual probe solver reported " + std::string(to_string(sol.status)));
  const Scalar t = sol.dual_objective;
  const Scalar upper = sol.primal_objective;
  res.margin = t;
  res.bound = upper;
  if (sol.status == SdpStatus::Optimal && t > Scalar(opts.feasible_margin) * scale) {
    res.outcome = ProbeOutcome::StrictlyFeasible;
    return res;
  }
  if (upper < Scalar(opts.reducing_margin) * scale || sol.status == SdpStatus::Optimal) {
    // The primal iterate carries the certificate y of the alternative.
    Vec<Scalar> y = sol.x.head(m);
    const Scalar ny = y.norm();
    if (ny > Scalar(0)) {
      y /= ny;
      const Blocks<Scalar> L = combine(p, y);
      const Scalar lmin = min_eigenvalue(L);
      const Scalar lscale = std::max(Scalar(1), max_abs(L));
      if (lmin >= -Scalar(opts.certificate_tol) * lscale &&
          p.c.dot(y) <= Scalar(opts.certificate_tol) * std::max(Scalar(1), p.c.norm())) {
        res.outcome = ProbeOutcome::ReducingDirectionFound;
        res.x = y;
        return res;
      }
    }
  }
  throw Error(Errc::Inconclusive, "dual probe margin " + std::to_string(static_cast<double>(t)) +
                                      " is between the thresholds");
}

// ---------------------------------------------------------------------------
// Bisection.

template <class Scalar>
OracleProblem<Scalar> oracle_problem(const StateSpacePlant<Scalar>& plant, std::optional<Scalar> gamma) {
  try {
    auto [sdp, report] = facial_reduce_dual(assemble_lmi_full(plant, gamma, PerpMode::NullVector));
    return {std::move(sdp), std::move(report)};
  } catch (const Error& e) {
    if (e.code() != Errc::NullVectorDegenerate && e.code() != Errc::Unsupported &&
        e.code() != Errc::StructureMismatch && e.code() != Errc::IdenticallyZeroChannel)
      throw;
    spdlog::debug("oracle: unreduced generic LMI ({})", e.what());
  }
  return {assemble_lmi_full(plant, gamma).sdp, std::nullopt};
}

namespace {

enum class Level { Feasible, Infeasible, Unknown };

template <class Scalar>
Level probe_level(const StateSpacePlant<Scalar>& plant, Scalar gamma, const BisectOptions& opts) {
  ProbeOptions po;
  po.sdp = opts.sdp;
  po.feasible_margin = 1e-9;
  po.reducing_margin = 1e-9;
  try {
    const auto r = strict_feasibility_probe(oracle_problem(plant, std::optional<Scalar>(gamma)).sdp,
                                            ProbeSide::Primal, po);
    // Infeasibility needs F_0 . Y > 0 well above the residual of F_i . Y = 0.
    if (r.outcome == ProbeOutcome::StrictlyFeasible) return Level::Feasible;
    if (r.bound < -Scalar(1e-9) && r.residual < Scalar(1e-2) * -r.bound) return Level::Infeasible;
  } catch (const Error& e) {
    if (e.code() != Errc::Inconclusive) throw;
  }
  return Level::Unknown;
}

template <class Scalar>
BisectResult bisect_impl(const StateSpacePlant<Scalar>& plant, const BisectOptions& opts) {
  BisectResult res;
  const Scalar tol = Scalar(opts.tol);
  Scalar lo = Scalar(opts.lo);
  std::optional<Scalar> hi;
  if (opts.hi) hi = Scalar(*opts.hi);

  const auto [problem, report] = oracle_problem(plant, std::optional<Scalar>{});
  res.reduced = report.has_value();
  const auto sol = sdp_solve(problem, opts.sdp);
  ++res.solves;
  if (sol.status == SdpStatus::Optimal || sol.status == SdpStatus::MaxIter ||
      sol.status == SdpStatus::NearSingular) {
    const Scalar scale = Scalar(1) + std::abs(sol.primal_objective);
    if (sol.dual_residual <= Scalar(1e-8) * scale) lo = std::max(lo, sol.dual_objective - Scalar(1e-9) * scale);
    if (sol.x.size() > 0 && min_eigenvalue(problem.slack(sol.x)) >= Scalar(0) &&
        (!hi || sol.primal_objective < *hi))
      hi = sol.primal_objective;
  }
  spdlog::debug("bisect: direct solve {} bracket [{}, {}]", to_string(sol.status),
                static_cast<double>(lo), hi ? static_cast<double>(*hi) : -1.0);
  if (hi && *hi - lo <= tol) {
    res.direct = true;
  } else {
    if (!hi) {
      Scalar h = std::max(Scalar(1), Scalar(2) * lo);
      int k = 0;
      for (; k < 40; ++k, h *= Scalar(2)) {
        ++res.solves;
        if (probe_level(plant, h, opts) == Level::Feasible) break;
      }
      if (k == 40) throw Error(Errc::OracleInconclusive, "no feasible gamma found by doubling");
      hi = h;
    }
    for (int step = 0; step < opts.max_steps && *hi - lo > tol; ++step) {
      const Scalar w = *hi - lo;
      const Scalar mid = lo + w / Scalar(2);
      ++res.solves;
      const Level l = probe_level(plant, mid, opts);
      if (l == Level::Feasible) {
        hi = mid;
      } else if (l == Level::Infeasible) {
        lo = mid;
      } else {
        ++res.inconclusive_probes;
        const Scalar q3 = lo + Scalar(0.75) * w, q1 = lo + Scalar(0.25) * w;
        bool moved = false;
        ++res.solves;
        if (probe_level(plant, q3, opts) == Level::Feasible) hi = q3, moved = true;
        ++res.solves;
        if (probe_level(plant, q1, opts) == Level::Infeasible) lo = q1, moved = true;
        if (!moved) break;
      }
    }
  }
  res.lo = static_cast<double>(lo);
  res.hi = static_cast<double>(*hi);
  res.gamma = static_cast<double>((lo + *hi) / Scalar(2));
  res.conclusive = *hi - lo <= tol;
  return res;
}

}  // namespace

template <class Scalar>
BisectResult bisect_gamma(const StateSpacePlant<Scalar>& plant, const BisectOptions& opts) {
  std::optional<BisectResult> res;
  try {
    res = bisect_impl(plant, opts);
  } catch (const Error& e) {
    if (e.code() != Errc::OracleInconclusive && e.code() != Errc::NearSingular &&
        e.code() != Errc::MaxIter)
      throw;
  }
  if constexpr (std::is_same_v<Scalar, double>) {
    if ((!res || !res->conclusive) && opts.long_double_fallback) {
      spdlog::debug("bisect: retrying in extended precision");
      try {
        BisectResult ext = bisect_impl(plant.template cast<long double>(), opts);
        ext.extended = true;
        if (res) ext.solves += res->solves;
        if (!res || ext.hi - ext.lo < res->hi - res->lo) res = ext;
      } catch (const Error& e) {
        if (e.code() != Errc::OracleInconclusive && e.code() != Errc::NearSingular &&
            e.code() != Errc::MaxIter)
          throw;
      }
    }
  }
  if (!res || res->hi - res->lo > 100.0 * opts.tol)
    throw Error(Errc::OracleInconclusive, "bisection could not certify a gamma bracket");
  return *res;
}

// ---------------------------------------------------------------------------
// Dual structure and facial reduction.

namespace {

struct Range {
  int start = 0, size = 0;
};

// Offsets of the groups of a partition.
struct Offsets {
  Range axis, minus, plus, infinite, tail;
};

Offsets offsets(const BlockPartition& p) {
  Offsets o;
  int k = 0;
  o.axis = {k, p.axis};
  k += p.axis;
  o.minus = {k, p.minus};
  k += p.minus;
  o.plus = {k, p.plus};
  k += p.plus;
  o.infinite = {k, p.infinite};
  k += p.infinite;
  o.tail = {k, p.tail};
  return o;
}

template <class Scalar>
Mat<Scalar> select(int n, const std::vector<Range>& keep) {
  int k = 0;
  for (const auto& r : keep) k += r.size;
  Mat<Scalar> Q = Mat<Scalar>::Zero(n, k);
  int c = 0;
  for (const auto& r : keep)
    for (int i = 0; i < r.size; ++i) Q(r.start + i, c++) = Scalar(1);
  return Q;
}

// Face of the Z (or V) block: drop stable rows and the infinite chain
// beyond its first column.
template <class Scalar>
Mat<Scalar> side_face(const BlockPartition& p) {
  const Offsets o = offsets(p);
  Range inf1{o.infinite.start, std::min(1, o.infinite.size)};
  return select<Scalar>(p.size(), {o.axis, o.plus, inf1, o.tail});
}

template <class Scalar>
Mat<Scalar> coupling_face(const Lmi<Scalar>& lmi, const Tolerances<Scalar>& tol) {
  auto half = [&](const BlockPartition& p, const Mat<Scalar>& S, int dim) -> Mat<Scalar> {
    const Offsets o = offsets(p);
    if (lmi.form == LmiForm::Reduced) return select<Scalar>(dim, {o.plus});
    return orth<Scalar>(Mat<Scalar>(S.middleCols(o.plus.start, o.plus.size)), tol);
  };
  const Mat<Scalar> Qx = half(lmi.form == LmiForm::Reduced ? lmi.wx_part : lmi.z_part, lmi.Sx, lmi.x_dim);
  const Mat<Scalar> Qy = half(lmi.form == LmiForm::Reduced ? lmi.wy_part : lmi.v_part, lmi.Sy, lmi.y_dim);
  Mat<Scalar> Q = Mat<Scalar>::Zero(lmi.x_dim + lmi.y_dim, Qx.cols() + Qy.cols());
  Q.topLeftCorner(lmi.x_dim, Qx.cols()) = Qx;
  Q.bottomRightCorner(lmi.y_dim, Qy.cols()) = Qy;
  return Q;
}

template <class Scalar>
void require_layout(const Lmi<Scalar>& lmi) {
  if (lmi.form == LmiForm::Full && lmi.mode != PerpMode::NullVector)
    throw Error(Errc::Unsupported, "the structural zero patterns need the null-vector layout");
}

template <class Scalar>
std::string face_label(const Lmi<Scalar>& lmi) {
  std::string s;
  auto add = [&](const char* l) { s += s.empty() ? l : std::string("+") + l; };
  if (lmi.z_part.minus + lmi.v_part.minus > 0) add("stable");
  if (lmi.z_part.axis + lmi.v_part.axis > 0) add("axis");
  if (lmi.z_part.infinite + lmi.v_part.infinite > 0) add("infinite");
  return s.empty() ? "none" : s;
}

}  // namespace

template <class Scalar>
PatternCheck<Scalar> dual_pattern(const Lmi<Scalar>& lmi, const Blocks<Scalar>& Y) {
  require_layout(lmi);
  PatternCheck<Scalar> pc;
  auto record = [&](const std::string& name, Scalar v, Scalar trace) {
    const Scalar rel = v / std::max(trace, std::numeric_limits<Scalar>::min());
    pc.blocks.emplace_back(name, rel);
    if (pc.where.empty() || rel > pc.worst) {
      pc.where = name;
      pc.worst = rel;
    }
  };
  auto side = [&](const std::string& nm, const Mat<Scalar>& Z, const BlockPartition& p) {
    const Offsets o = offsets(p);
    const Scalar tr = Z.trace();
    if (o.minus.size > 0)
      record(nm + "11 stable", Z.block(o.minus.start, o.minus.start, o.minus.size, o.minus.size).norm(), tr);
    if (o.infinite.size > 0) {
      const int k = o.infinite.start, r = o.infinite.size;
      record(nm + "21", Z.block(k, 0, r, p.finite()).norm(), tr);
      Mat<Scalar> Z22 = Z.block(k, k, r, r);
      Z22(0, 0) = Scalar(0);
      record(nm + "22 off-(1,1)", Z22.norm(), tr);
      if (r > 1) record(nm + "32 k>=2", Z.block(o.tail.start, k + 1, o.tail.size, r - 1).norm(), tr);
    }
    if (o.axis.size > 0) {
      // Conjugate pairs carry equal diagonals and no coupling.
      Scalar worst(0);
      int a = o.axis.start;
      Mat<Scalar> Za = Z.block(a, a, o.axis.size, o.axis.size);
      Mat<Scalar> off = Za;
      int q = 0;
      for (int sz : p.axis_blocks) {
        if (sz == 2) worst = std::max(worst, std::abs(Za(q, q) - Za(q + 1, q + 1)));
        off.block(q, q, sz, sz).diagonal().setZero();
        q += sz;
      }
      worst = std::max(worst, off.norm());
      record(nm + "11 axis pairing", worst, tr);
      const int rest = p.minus + p.plus;
      if (rest > 0) record(nm + "21 axis", Z.block(o.minus.start, a, rest, o.axis.size).norm(), tr);
    }
  };
  side("Z", Y[0], lmi.z_part);
  side("V", Y[1], lmi.v_part);
  if (lmi.w_block >= 0) {
    const Mat<Scalar>& W = Y[lmi.w_block];
    const Mat<Scalar> Q = coupling_face(lmi, Tolerances<Scalar>{});
    const Mat<Scalar> P = Q * Q.transpose();
    // W vanishes on the optimal face when there are no unstable zeros, so
    // its residue is measured against the trace of the whole dual.
    Scalar total(0);
    for (const auto& B : Y) total += B.trace();
    record("W outside face", (W - P * W * P).norm(), total);
  }
  return pc;
}

template <class Scalar>
std::pair<SdpProblem<Scalar>, ReductionReport> facial_reduce_dual(const Lmi<Scalar>& lmi,
                                                                  const Tolerances<Scalar>& tol) {
  require_layout(lmi);
  const auto& p = lmi.sdp;
  ReductionReport rep;
  rep.faces = face_label(lmi);
  rep.sizes_before = p.block_sizes;
  rep.m_before = p.m();

  std::vector<Mat<Scalar>> Q(p.block_sizes.size());
  for (std::size_t b = 0; b < Q.size(); ++b) Q[b] = Mat<Scalar>::Identity(p.block_sizes[b], p.block_sizes[b]);
  Q[0] = side_face<Scalar>(lmi.z_part);
  Q[1] = side_face<Scalar>(lmi.v_part);
  if (lmi.w_block >= 0) Q[lmi.w_block] = coupling_face(lmi, tol);

  std::vector<std::string> pat;
  auto describe = [&](const char* nm, const BlockPartition& bp) {
    if (bp.minus > 0) pat.push_back(std::string(nm) + "11 stable = 0");
    if (bp.infinite > 1) pat.push_back(std::string(nm) + "22 chain rows 2.. = 0");
  };
  describe("Z", lmi.z_part);
  describe("V", lmi.v_part);
  if (lmi.w_block >= 0 && Q[lmi.w_block].cols() < p.block_sizes[lmi.w_block])
    pat.push_back("W outside span of unstable null vectors = 0");
  for (std::size_t i = 0; i < pat.size(); ++i) rep.pattern += (i ? "; " : "") + pat[i];
  if (rep.pattern.empty()) rep.pattern = "none";

  // Compress every coefficient matrix onto the face, dropping empty blocks.
  SdpProblem<Scalar> face;
  std::vector<std::size_t> kept;
  for (std::size_t b = 0; b < Q.size(); ++b)
    if (Q[b].cols() > 0) {
      kept.push_back(b);
      face.block_sizes.push_back(static_cast<int>(Q[b].cols()));
    }
  const int m = p.m();
  std::vector<Blocks<Scalar>> Ft(m + 1);
  for (int i = 0; i <= m; ++i)
    for (std::size_t b : kept) Ft[i].push_back(sym<Scalar>(Q[b].transpose() * p.F[i][b] * Q[b]));

  // Remove the variable directions that no longer reach the slack.
  int D = 0;
  for (int s : face.block_sizes) D += s * s;
  Mat<Scalar> A(D, m);
  for (int i = 1; i <= m; ++i) {
    int o = 0;
    for (const auto& blk : Ft[i]) {
      A.col(i - 1).segment(o, blk.size()) = Eigen::Map<const Vec<Scalar>>(blk.data(), blk.size());
      o += static_cast<int>(blk.size());
    }
  }
  Eigen::JacobiSVD<Mat<Scalar>> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int k = 0;
  while (k < sv.size() && sv(k) > tol.rank(std::max(D, m), sv.size() ? sv(0) : Scalar(0))) ++k;
  const Mat<Scalar> Vk = svd.matrixV().leftCols(k);
  const Vec<Scalar> c_range = Vk * (Vk.transpose() * p.c);
  if ((p.c - c_range).norm() > Scalar(1e-8) * std::max(Scalar(1), p.c.norm()))
    throw Error(Errc::StructureMismatch, "objective leaves the row space of the reduced constraints");

  face.c = Vk.transpose() * p.c;
  face.F.push_back(Ft[0]);
  for (int j = 0; j < k; ++j) {
    Blocks<Scalar> blk;
    for (std::size_t b = 0; b < kept.size(); ++b) {
      Mat<Scalar> M = Mat<Scalar>::Zero(face.block_sizes[b], face.block_sizes[b]);
      for (int i = 1; i <= m; ++i)
        if (Vk(i - 1, j) != Scalar(0)) M += Vk(i - 1, j) * Ft[i][b];
      blk.push_back(sym<Scalar>(M));
    }
    face.F.push_back(std::move(blk));
  }
  rep.sizes_after = face.block_sizes;
  rep.m_after = k;
  return {std::move(face), std::move(rep)};
}

template <class Scalar>
Mat<Scalar> matrix_completion(const Mat<Scalar>& U11, const Mat<Scalar>& U31, const Mat<Scalar>& U22,
                              const Mat<Scalar>& U32, const Mat<Scalar>& U33, const Tolerances<Scalar>& tol) {
  const int k = static_cast<int>(U11.rows()), l = static_cast<int>(U22.rows()), q = static_cast<int>(U33.rows());
  if (U31.rows() != q || U31.cols() != k || U32.rows() != q || U32.cols() != l)
    throw Error(Errc::HypothesisViolated, "completion blocks have inconsistent sizes");
  auto bordered = [&](const Mat<Scalar>& D, const Mat<Scalar>& B) {
    const int d = static_cast<int>(D.rows());
    Mat<Scalar> M(d + q, d + q);
    M << D, B.transpose(), B, U33;
    return M;
  };
  for (const Mat<Scalar>& M : {bordered(U11, U31), bordered(U22, U32)}) {
    if (M.size() == 0) continue;
    const Scalar lmin = Eigen::SelfAdjointEigenSolver<Mat<Scalar>>(sym<Scalar>(M)).eigenvalues()(0);
    if (lmin < -Scalar(1e-9) * std::max(Scalar(1), M.trace()))
      throw Error(Errc::HypothesisViolated, "a bordered block is not positive semidefinite");
  }
  if (q == 0) return Mat<Scalar>::Zero(l, k);
  Eigen::JacobiSVD<Mat<Scalar>> svd(U33, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Vec<Scalar> inv = Vec<Scalar>::Zero(q);
  for (int i = 0; i < q; ++i)
    if (sv(i) > tol.rank(q, sv(0))) inv(i) = Scalar(1) / sv(i);
  const Mat<Scalar> pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return U32.transpose() * pinv * U31;
}

#define HINF_INSTANTIATE(S)                                                                        \
  template Mat<S> smat(const Vec<S>&, int, int);                                                   \
  template Mat<S> orth(const Mat<S>&, const Tolerances<S>&);                                       \
  template Mat<S> perp(const Vec<S>&);                                                             \
  template Lmi<S> assemble_lmi_full(const StateSpacePlant<S>&, std::optional<S>, PerpMode,         \
                                    const Tolerances<S>&);                                         \
  template Lmi<S> assemble_from_reduced(const ReducedData<S>&, std::optional<S>);                  \
  template Lmi<S> assemble_lmi2(const StateSpacePlant<S>&, const Tolerances<S>&);                  \
  template Lmi<S> assemble_reduced(const StateSpacePlant<S>&, GammaCase, const Tolerances<S>&);    \
  template ProbeResult<S> strict_feasibility_probe(const SdpProblem<S>&, ProbeSide,                \
                                                   const ProbeOptions&);                           \
  template OracleProblem<S> oracle_problem(const StateSpacePlant<S>&, std::optional<S>);           \
  template BisectResult bisect_gamma(const StateSpacePlant<S>&, const BisectOptions&);             \
  template PatternCheck<S> dual_pattern(const Lmi<S>&, const Blocks<S>&);                          \
  template std::pair<SdpProblem<S>, ReductionReport> facial_reduce_dual(const Lmi<S>&,             \
                                                                        const Tolerances<S>&);     \
  template Mat<S> matrix_completion(const Mat<S>&, const Mat<S>&, const Mat<S>&, const Mat<S>&,    \
                                    const Mat<S>&, const Tolerances<S>&);

HINF_INSTANTIATE(double)
HINF_INSTANTIATE(long double)

}  // namespace hinf
