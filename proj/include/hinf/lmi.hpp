#pragma once

#include "hinf/gamma.hpp"
#include "hinf/sdp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hinf {

/// Perpendicular basis used by the elimination-of-variables LMI.
///   Generic    orthonormal null space of (b2; d12; 0)^T, resp. (c2; d21; 0)^T
///   NullVector [[S, P, 0], [f^T, p^T, 0], [0, 0, 1]] from the zero data
enum class PerpMode { Generic, NullVector };

enum class LmiForm { Full, Reduced };

std::string_view to_string(PerpMode m);

/// Sizes of the coordinate groups of a Z or V block, in row order:
/// imaginary-axis zeros, stable zeros, unstable zeros, infinite-zero chain,
/// then `tail` trailing scalar rows.
struct BlockPartition {
  int axis = 0, minus = 0, plus = 0, infinite = 0, tail = 0;
  std::vector<int> axis_blocks;  ///< 2 per conjugate pair, 1 for a zero at the origin

  int finite() const { return axis + minus + plus; }
  int size() const { return finite() + infinite + tail; }
};

/// An assembled LMI in SDPA form together with its layout. Block 0 is Z
/// (the G_zu constraint), block 1 is V (G_yw), block 2 is W (coupling);
/// further blocks are the scalar side constraints.
template <class Scalar>
struct Lmi {
  SdpProblem<Scalar> sdp;
  LmiForm form = LmiForm::Full;
  PerpMode mode = PerpMode::Generic;
  std::optional<Scalar> gamma;  ///< fixed level, or nullopt when gamma is x[0]
  int x_offset = 0, x_dim = 0;  ///< svec of X (or X_hat) in the variable vector
  int y_offset = 0, y_dim = 0;
  BlockPartition z_part, v_part;  ///< valid for NullVector and Reduced forms
  BlockPartition wx_part, wy_part;  ///< W halves; Reduced form only
  int w_block = 2;                  ///< -1 when W is empty
  Mat<Scalar> Sx, Sy;               ///< finite null vectors [axis, stable, unstable]; Full NullVector only
  std::vector<std::string> block_names;
};

/// Number of svec coordinates of an n x n symmetric matrix.
inline int svec_size(int n) { return n * (n + 1) / 2; }

/// Symmetric matrix from svec coordinates with the unnormalized basis
/// E_ii and E_ij + E_ji.
template <class Scalar>
Mat<Scalar> smat(const Vec<Scalar>& x, int offset, int n);

/// Orthonormal basis of the range of M (rank by tolerances).
template <class Scalar>
Mat<Scalar> orth(const Mat<Scalar>& M, const Tolerances<Scalar>& tol = {});

/// Orthonormal basis of the null space of v^T.
template <class Scalar>
Mat<Scalar> perp(const Vec<Scalar>& v);

/// The elimination-of-variables LMI in (gamma, X, Y): blocks of sizes n+1,
/// n+1 and 2n. With `gamma` set it is a feasibility problem (objective 0),
/// otherwise gamma is minimized. Throws DegenerateChannel when b2 and d12
/// (or c2 and d21) vanish, NullVectorDegenerate when the NullVector basis
/// is rank deficient.
template <class Scalar>
Lmi<Scalar> assemble_lmi_full(const StateSpacePlant<Scalar>& plant, std::optional<Scalar> gamma,
                              PerpMode mode = PerpMode::Generic, const Tolerances<Scalar>& tol = {});

/// Data of a reduced LMI over (gamma, X_hat, Y_hat).
template <class Scalar>
struct ReducedData {
  NullBlock<Scalar> zu, yw;
  Vec<Scalar> h1, h2;
  Mat<Scalar> J;
  BlockPartition zu_part, yw_part;
  std::optional<Scalar> d11_block;  ///< adds [[g, -d11], [-d11, g]]
  std::vector<Scalar> axis_bounds;   ///< adds [[g, a], [a, g]] for each a
};

template <class Scalar>
Lmi<Scalar> assemble_from_reduced(const ReducedData<Scalar>& data, std::optional<Scalar> gamma);

/// The LMI in (gamma, X_hat, Y_hat) over every finite zero, ordered
/// [axis, stable, unstable]. Requires d12 != 0 and d21 != 0.
template <class Scalar>
Lmi<Scalar> assemble_lmi2(const StateSpacePlant<Scalar>& plant, const Tolerances<Scalar>& tol = {});

/// The case-specific reduced LMI whose optimum is gamma*:
///   Case1, Case2  unstable zeros only
///   Case3         non-axis zeros plus gamma >= |h10_j / f_j| per axis zero
///   Case4         every finite zero plus the d11 block
/// Throws Unsupported for ZwFallback.
template <class Scalar>
Lmi<Scalar> assemble_reduced(const StateSpacePlant<Scalar>& plant, GammaCase c,
                             const Tolerances<Scalar>& tol = {});

struct BisectOptions {
  double tol = 1e-6;         ///< bracket width
  double lo = 0.0;
  std::optional<double> hi;  ///< found by doubling when absent
  int max_steps = 60;
  bool long_double_fallback = true;
  SdpOptions sdp;
};

struct BisectResult {
  double gamma = 0.0;
  double lo = 0.0, hi = 0.0;
  bool conclusive = false;
  bool direct = false;  ///< bracket from one min-gamma solve
  bool extended = false;  ///< long double solves were used
  bool reduced = false;   ///< the facially reduced null-vector LMI was solved
  int solves = 0;
  int inconclusive_probes = 0;
};

struct ReductionReport {
  std::string faces;    ///< "stable", "axis", "infinite" joined by "+", or "none"
  std::string pattern;  ///< zero blocks imposed
  std::vector<int> sizes_before, sizes_after;
  int m_before = 0, m_after = 0;
};

template <class Scalar>
struct OracleProblem {
  SdpProblem<Scalar> sdp;
  std::optional<ReductionReport> report;  ///< absent for the generic fallback
};

/// The full LMI in null-vector coordinates with its dual restricted to the
/// face given by the zero structure. Plants whose zero data does not admit
/// that basis fall back to the unreduced generic form.
template <class Scalar>
OracleProblem<Scalar> oracle_problem(const StateSpacePlant<Scalar>& plant, std::optional<Scalar> gamma);

/// gamma* of the full LMI in null-vector coordinates after facial reduction
/// of its dual (the unreduced generic LMI when the zero data does not allow
/// that basis). One min-gamma solve brackets the optimum between the dual
/// and primal objectives; when the bracket is wider than tol, bisection over
/// feasibility probes narrows it. Throws
/// OracleInconclusive when no bracket of width 100 tol is certified.
template <class Scalar>
BisectResult bisect_gamma(const StateSpacePlant<Scalar>& plant, const BisectOptions& opts = {});

enum class ProbeSide { Primal, Dual };
enum class ProbeOutcome { StrictlyFeasible, ReducingDirectionFound };

std::string_view to_string(ProbeOutcome o);

template <class Scalar>
struct ProbeResult {
  ProbeOutcome outcome = ProbeOutcome::StrictlyFeasible;
  Scalar margin = Scalar(0);  ///< optimal t of the min-eigenvalue subproblem
  Scalar bound = Scalar(0);   ///< -F_0 . Y of the normalized certificate (primal side)
  Scalar residual = Scalar(0);  ///< max |F_i . Y| of that certificate, relative
  Vec<Scalar> x;              ///< interior point (primal side) or certificate y (dual side)
  Blocks<Scalar> Y;           ///< certificate X_hat of the primal alternative
  SdpStatus status = SdpStatus::Optimal;
};

struct ProbeOptions {
  double feasible_margin = 1e-7;   ///< t above this (relative) is strict feasibility
  double reducing_margin = 1e-9;   ///< t below this (relative) admits a certificate
  double certificate_tol = 1e-6;
  SdpOptions sdp;
};

/// Strict feasibility of the primal (sum x_i F_i - F_0 > 0) or of the dual
/// (F_i . Y = c_i, Y > 0) by maximizing the smallest eigenvalue. A margin
/// between the two thresholds throws Inconclusive.
template <class Scalar>
ProbeResult<Scalar> strict_feasibility_probe(const SdpProblem<Scalar>& p, ProbeSide side,
                                             const ProbeOptions& opts = {});

/// Worst zero-block norm of a solved dual relative to the trace of its
/// block (of the whole dual for W).
template <class Scalar>
struct PatternCheck {
  Scalar worst = Scalar(0);
  std::string where;
  std::vector<std::pair<std::string, Scalar>> blocks;
};

/// Zero blocks claimed by the structural zero patterns for a solved dual Y:
///   Reduced form: stable blocks of Z11, V11, W11, W22; for axis zeros the
///     pairing of Z11 and V11 and vanishing of the axis rows of W.
///   NullVector full form with an infinite chain: Z21, V21, off-(1,1)
///     entries of Z22, V22 and the tail entries beyond the first chain row.
template <class Scalar>
PatternCheck<Scalar> dual_pattern(const Lmi<Scalar>& lmi, const Blocks<Scalar>& Y);

/// Restricts the dual of `lmi` to the face given by the structural zero patterns
/// and removes the linear dependencies this creates among the primal
/// variables. The result is a plain SDP whose variables no longer have
/// the layout of `lmi`; its optimal value is unchanged.
template <class Scalar>
std::pair<SdpProblem<Scalar>, ReductionReport> facial_reduce_dual(const Lmi<Scalar>& lmi,
                                                                  const Tolerances<Scalar>& tol = {});

/// U21 making [[U11, *, *], [U21, U22, *], [U31, U32, U33]] PSD, given PSD
/// bordered blocks [[U11, U31^T], [U31, U33]] and [[U22, U32^T], [U32, U33]].
/// Throws HypothesisViolated otherwise.
template <class Scalar>
Mat<Scalar> matrix_completion(const Mat<Scalar>& U11, const Mat<Scalar>& U31, const Mat<Scalar>& U22,
                              const Mat<Scalar>& U32, const Mat<Scalar>& U33,
                              const Tolerances<Scalar>& tol = {});

}  // namespace hinf
