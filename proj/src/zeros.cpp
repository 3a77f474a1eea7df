#include "hinf/zeros.hpp"

#include "hinf/matrix_equations.hpp"

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <numeric>
#include <sstream>

namespace hinf {

std::string_view to_string(ZeroClass k) {
  switch (k) {
    case ZeroClass::Stable: return "stable";
    case ZeroClass::Imaginary: return "imaginary";
    case ZeroClass::Unstable: return "unstable";
  }
  return "?";
}

template <class Scalar>
int relative_degree(const Realization<Scalar>& r, const Tolerances<Scalar>& tol) {
  if (r.d != Scalar(0)) return 0;
  const int n = r.n();
  const Scalar na = spectral_norm(r.A);
  Vec<Scalar> v = r.b;
  Scalar scale = r.c.norm() * r.b.norm();
  for (int k = 0; k < n; ++k) {
    if (std::abs(r.c.dot(v)) > tol.rank(n, scale)) return k + 1;
    v = r.A * v;
    scale *= na;
  }
  throw Error(Errc::IdenticallyZeroChannel, "transfer function is identically zero");
}

namespace {

// Right zero dynamics: (A + b K^T) V = V L with c^T V = 0 (d = 0) or V = I.
template <class Scalar>
struct Dynamics {
  int r = 0;
  Mat<Scalar> V;
  Vec<Scalar> K;
  Mat<Scalar> L;
};

template <class Scalar>
Dynamics<Scalar> zero_dynamics(const Realization<Scalar>& re, const Tolerances<Scalar>& tol) {
  const int n = re.n();
  if (re.d == Scalar(0) && re.b.norm() == Scalar(0) && re.c.norm() == Scalar(0))
    throw Error(Errc::DegenerateRealization, "(b;d) and (c;d) are both zero");
  Dynamics<Scalar> z;
  z.r = relative_degree(re, tol);
  if (z.r == 0) {
    z.V = Mat<Scalar>::Identity(n, n);
    z.K = -re.c / re.d;
    z.L = re.A + re.b * z.K.transpose();
    return z;
  }
  Mat<Scalar> O(z.r, n);
  Vec<Scalar> row = re.c;
  for (int k = 0; k < z.r; ++k) {
    O.row(k) = row.transpose();
    row = re.A.transpose() * row;
  }
  const Scalar kappa = O.row(z.r - 1).dot(re.b);
  z.K = -row / kappa;
  Eigen::JacobiSVD<Mat<Scalar>> svd(O, Eigen::ComputeFullV);
  z.V = svd.matrixV().rightCols(n - z.r);
  z.L = z.V.transpose() * (re.A + re.b * z.K.transpose()) * z.V;
  return z;
}

template <class Scalar>
std::complex<Scalar> block_eigenvalue(const Mat<Scalar>& T, int i, int size) {
  if (size == 1) return {T(i, i), Scalar(0)};
  const Scalar a = T(i, i), b = T(i, i + 1), c = T(i + 1, i), d = T(i + 1, i + 1);
  const Scalar mid = (a + d) / 2;
  const Scalar disc = (a - d) * (a - d) / 4 + b * c;
  if (disc >= 0) return {mid, Scalar(0)};
  return {mid, std::sqrt(-disc)};
}

struct BlockInfo {
  int size;
  int group;
};

template <class Scalar>
struct Group {
  std::complex<Scalar> value;
  bool real = true;
  int size = 0;
  ZeroClass klass = ZeroClass::Unstable;
};

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

template <class Scalar>
bool tiny(Scalar x, Scalar scale) {
  return std::abs(x) <= Scalar(1e3) * std::numeric_limits<Scalar>::epsilon() * scale;
}

// Canonical form of one decoupled cluster. W = n x m basis with
// (A + b K^T) W = W T, phi = K^T W. Returns the transformed cluster.
template <class Scalar>
ZeroCluster<Scalar> canonicalize(const Group<Scalar>& g, const Mat<Scalar>& W, const Vec<Scalar>& phi,
                                 const Mat<Scalar>& T, Scalar tau_cluster,
                                 std::vector<std::string>& warnings) {
  using C = std::complex<Scalar>;
  const int m = static_cast<int>(T.rows());
  ZeroCluster<Scalar> out;
  out.value = g.value;
  out.klass = g.klass;
  out.multiplicity = g.real ? m : m / 2;
  Mat<Scalar> Cm = Mat<Scalar>::Identity(m, m);
  Mat<Scalar> L = T;
  std::ostringstream note;

  auto col_norm = [&](const Vec<Scalar>& x) {
    return std::sqrt((W * x).squaredNorm() + phi.dot(x) * phi.dot(x));
  };
  auto orient = [&](Vec<Scalar>& x) {
    const Scalar fx = phi.dot(x);
    const Vec<Scalar> s = W * x;
    Scalar sign_ref = fx;
    if (tiny(fx, col_norm(x))) {
      Eigen::Index i;
      s.cwiseAbs().maxCoeff(&i);
      sign_ref = s(i);
    }
    if (sign_ref < 0) x = -x;
  };

  if (g.real && m == 1) {
    out.kind = BlockKind::Real;
    L(0, 0) = g.value.real();
    Vec<Scalar> x = Vec<Scalar>::Ones(1);
    x /= col_norm(x);
    orient(x);
    Cm = x;
  } else if (g.real) {
    const Scalar lam = T.trace() / Scalar(m);
    const Mat<Scalar> N = T - lam * Mat<Scalar>::Identity(m, m);
    Eigen::JacobiSVD<Mat<Scalar>> svdN(N);
    int rank = 0;
    for (int i = 0; i < m; ++i) rank += svdN.singularValues()(i) > tau_cluster ? 1 : 0;
    if (rank == 0) {
      out.kind = BlockKind::Semisimple;
      L = lam * Mat<Scalar>::Identity(m, m);
      for (int j = 0; j < m; ++j) {
        Vec<Scalar> x = Vec<Scalar>::Unit(m, j);
        x /= col_norm(x);
        orient(x);
        Cm.col(j) = x;
      }
    } else if (rank == m - 1) {
      out.kind = BlockKind::JordanChain;
      // Top vector x_m with phi^T N^j x_m = 0 (j < m-1), phi^T N^{m-1} x_m = 1,
      // so that f = (1, 0, ..., 0) along the chain x_{k-1} = N x_k.
      Mat<Scalar> Ob(m, m);
      Vec<Scalar> row = phi;
      for (int j = 0; j < m; ++j) {
        Ob.row(j) = row.transpose();
        row = N.transpose() * row;
      }
      Eigen::JacobiSVD<Mat<Scalar>> svdO(Ob);
      const auto& so = svdO.singularValues();
      Vec<Scalar> top;
      if (so(m - 1) > std::sqrt(std::numeric_limits<Scalar>::epsilon()) * so(0)) {
        top = Ob.fullPivLu().solve(Vec<Scalar>::Unit(m, m - 1));
      } else {
        Mat<Scalar> Np = Mat<Scalar>::Identity(m, m);
        for (int j = 0; j + 1 < m; ++j) Np = Np * N;
        Eigen::JacobiSVD<Mat<Scalar>> svdP(Np, Eigen::ComputeFullV);
        top = svdP.matrixV().col(0);
      }
      Cm.col(m - 1) = top;
      for (int j = m - 1; j > 0; --j) Cm.col(j - 1) = N * Cm.col(j);
      Cm /= col_norm(Cm.col(0));
      Vec<Scalar> head = Cm.col(0);
      orient(head);
      if (head.dot(Cm.col(0)) < 0) Cm = -Cm;
      L = lam * Mat<Scalar>::Identity(m, m);
      for (int j = 0; j + 1 < m; ++j) L(j, j + 1) = Scalar(1);
      note << "Jordan chain of length " << m << " at " << lam;
    } else {
      out.kind = BlockKind::Schur;
      note << "repeated zero " << lam << " with " << (m - rank)
           << " chains kept in Schur form";
    }
  } else if (m == 2) {
    out.kind = BlockKind::ComplexPair;
    Eigen::EigenSolver<Mat<Scalar>> es(T);
    int idx = es.eigenvalues()(0).imag() > 0 ? 0 : 1;
    const C lam = es.eigenvalues()(idx);
    CVec<Scalar> w = es.eigenvectors().col(idx);
    const CVec<Scalar> s = W.template cast<C>() * w;
    C fw = phi.template cast<C>().dot(w);  // dot conjugates the first argument; phi is real
    const Scalar nrm = std::sqrt(s.squaredNorm() + std::norm(fw));
    C phase(1);
    if (!tiny(std::abs(fw), nrm)) {
      phase = std::conj(fw) / std::abs(fw);
    } else {
      Eigen::Index i;
      s.cwiseAbs().maxCoeff(&i);
      phase = std::conj(s(i)) / std::abs(s(i));
    }
    w *= phase / nrm;
    Cm.col(0) = w.real();
    Cm.col(1) = w.imag();
    L << lam.real(), lam.imag(), -lam.imag(), lam.real();
    out.value = lam;
  } else {
    out.kind = BlockKind::Schur;
    note << "repeated complex zero " << g.value << " kept in Schur form";
  }
  if (out.kind == BlockKind::Schur) {
    Vec<Scalar> d(m);
    for (int j = 0; j < m; ++j) d(j) = Scalar(1) / col_norm(Vec<Scalar>::Unit(m, j));
    Cm = d.asDiagonal();
    L = d.cwiseInverse().asDiagonal() * T * d.asDiagonal();
  }
  const std::string msg = note.str();
  if (!msg.empty()) {
    warnings.push_back(msg);
    spdlog::warn("{}", msg);
  }
  out.S = W * Cm;
  out.f = Cm.transpose() * phi;
  out.Lambda = L;
  return out;
}

// Right null data of r, one canonical block per cluster, sorted by class
// (stable, imaginary, unstable) and then by (Re, Im).
template <class Scalar>
std::vector<ZeroCluster<Scalar>> analyze_right(const Realization<Scalar>& re,
                                               const Tolerances<Scalar>& tol,
                                               std::vector<std::string>& warnings, int* rdeg) {
  const Dynamics<Scalar> dyn = zero_dynamics(re, tol);
  if (rdeg) *rdeg = dyn.r;
  const int k = static_cast<int>(dyn.L.rows());
  if (k == 0) return {};
  const Scalar na = spectral_norm(re.A);
  const Scalar tau_axis = tol.axis(na);
  const Scalar tau_cl = tol.cluster(std::max(na, spectral_norm(dyn.L)));

  Eigen::RealSchur<Mat<Scalar>> rs(dyn.L);
  Mat<Scalar> T = rs.matrixT();
  Mat<Scalar> U = rs.matrixU();
  const auto raw = schur_blocks(T);
  const int nb = static_cast<int>(raw.size());
  std::vector<std::complex<Scalar>> rep(nb);
  for (int i = 0; i < nb; ++i) rep[i] = block_eigenvalue(T, raw[i].first, raw[i].second);

  std::vector<int> parent(nb);
  std::iota(parent.begin(), parent.end(), 0);
  for (int i = 0; i < nb; ++i)
    for (int j = i + 1; j < nb; ++j)
      if (std::abs(rep[i] - rep[j]) <= tau_cl) parent[find_root(parent, j)] = find_root(parent, i);

  std::vector<int> root_to_group(nb, -1);
  std::vector<Group<Scalar>> groups;
  std::vector<int> block_group(nb);
  std::vector<Scalar> trace_sum;
  for (int i = 0; i < nb; ++i) {
    const int root = find_root(parent, i);
    if (root_to_group[root] < 0) {
      root_to_group[root] = static_cast<int>(groups.size());
      groups.emplace_back();
      trace_sum.push_back(Scalar(0));
    }
    const int gi = root_to_group[root];
    block_group[i] = gi;
    groups[gi].size += raw[i].second;
    groups[gi].value += rep[i] * Scalar(raw[i].second);
    trace_sum[gi] += T.block(raw[i].first, raw[i].first, raw[i].second, raw[i].second).trace();
  }
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    auto& g = groups[gi];
    g.value /= Scalar(g.size);
    g.real = std::abs(g.value.imag()) <= tau_cl;
    if (g.real) g.value = {trace_sum[gi] / Scalar(g.size), Scalar(0)};
    const Scalar re_v = g.value.real();
    g.klass = re_v < -tau_axis ? ZeroClass::Stable
              : re_v <= tau_axis ? ZeroClass::Imaginary
                                 : ZeroClass::Unstable;
  }
  std::vector<int> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ga = groups[a];
    const auto& gb = groups[b];
    if (ga.klass != gb.klass) return static_cast<int>(ga.klass) < static_cast<int>(gb.klass);
    if (ga.value.real() != gb.value.real()) return ga.value.real() < gb.value.real();
    return ga.value.imag() < gb.value.imag();
  });
  std::vector<int> rank_of(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank_of[order[i]] = static_cast<int>(i);

  // Bubble the Schur blocks into group order with adjacent swaps.
  std::vector<BlockInfo> blocks(nb);
  for (int i = 0; i < nb; ++i) blocks[i] = {raw[i].second, rank_of[block_group[i]]};
  for (bool moved = true; moved;) {
    moved = false;
    int pos = 0;
    for (int i = 0; i + 1 < nb; ++i) {
      if (blocks[i].group > blocks[i + 1].group) {
        swap_schur_blocks(T, U, pos, blocks[i].size, blocks[i + 1].size);
        std::swap(blocks[i], blocks[i + 1]);
        moved = true;
      }
      pos += blocks[i].size;
    }
  }

  // Group spans, then decouple consecutive groups with Sylvester solves.
  const int ng = static_cast<int>(groups.size());
  std::vector<int> start(ng + 1, 0);
  {
    std::vector<int> size(ng, 0);
    for (const auto& b : blocks) size[b.group] += b.size;
    for (int g = 0; g < ng; ++g) start[g + 1] = start[g] + size[g];
  }
  Mat<Scalar> B = U;
  for (int g = 0; g + 1 < ng; ++g) {
    const int s = start[g], m = start[g + 1] - start[g], rest = k - start[g + 1];
    const Mat<Scalar> Tgg = T.block(s, s, m, m);
    const Mat<Scalar> Trr = T.block(s + m, s + m, rest, rest);
    const Mat<Scalar> Tgr = T.block(s, s + m, m, rest);
    const Mat<Scalar> Y = solve_sylvester<Scalar>(Tgg, Mat<Scalar>(-Trr), Mat<Scalar>(-Tgr));
    B.middleCols(s + m, rest) += B.middleCols(s, m) * Y;
    T.block(s, s + m, m, rest).setZero();
  }

  std::vector<ZeroCluster<Scalar>> out;
  for (int g = 0; g < ng; ++g) {
    const int s = start[g], m = start[g + 1] - start[g];
    const Mat<Scalar> W = dyn.V * B.middleCols(s, m);
    const Vec<Scalar> phi = W.transpose() * dyn.K;
    out.push_back(canonicalize(groups[order[g]], W, phi, Mat<Scalar>(T.block(s, s, m, m)), tau_cl,
                               warnings));
  }
  return out;
}

template <class Scalar>
NullBlock<Scalar> stack(const std::vector<const ZeroCluster<Scalar>*>& parts, int n) {
  int k = 0;
  for (const auto* c : parts) k += static_cast<int>(c->S.cols());
  NullBlock<Scalar> b{Mat<Scalar>(n, k), Vec<Scalar>(k), Mat<Scalar>::Zero(k, k)};
  int at = 0;
  for (const auto* c : parts) {
    const int m = static_cast<int>(c->S.cols());
    b.S.middleCols(at, m) = c->S;
    b.f.segment(at, m) = c->f;
    b.Lambda.block(at, at, m, m) = c->Lambda;
    at += m;
  }
  return b;
}

template <class Scalar>
NullBlock<Scalar> concat(const std::vector<const NullBlock<Scalar>*>& parts, int n) {
  int k = 0;
  for (const auto* p : parts) k += p->k();
  NullBlock<Scalar> b{Mat<Scalar>(n, k), Vec<Scalar>(k), Mat<Scalar>::Zero(k, k)};
  int at = 0;
  for (const auto* p : parts) {
    const int m = p->k();
    b.S.middleCols(at, m) = p->S;
    b.f.segment(at, m) = p->f;
    b.Lambda.block(at, at, m, m) = p->Lambda;
    at += m;
  }
  return b;
}

}  // namespace

template <class Scalar>
NullBlock<Scalar> ZeroData<Scalar>::all() const {
  const int n = static_cast<int>(std::max({minus.S.rows(), plus.S.rows(), axis.S.rows()}));
  return concat<Scalar>({&minus, &axis, &plus}, n);
}

template <class Scalar>
std::vector<InvariantZero<Scalar>> compute_zeros(const Realization<Scalar>& r, const Tolerances<Scalar>& tol) {
  std::vector<std::string> warnings;
  const auto clusters = analyze_right(r, tol, warnings, nullptr);
  std::vector<InvariantZero<Scalar>> zs;
  for (const auto& c : clusters) {
    zs.push_back({c.value, c.multiplicity, c.klass});
    if (c.value.imag() != Scalar(0)) zs.push_back({std::conj(c.value), c.multiplicity, c.klass});
  }
  std::sort(zs.begin(), zs.end(), [](const auto& a, const auto& b) {
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.value.imag() < b.value.imag();
  });
  return zs;
}

template <class Scalar>
std::vector<ZeroCluster<Scalar>> left_null_vectors(const Realization<Scalar>& r, const Tolerances<Scalar>& tol) {
  std::vector<std::string> warnings;
  return analyze_right(r.dual(), tol, warnings, nullptr);
}

template <class Scalar>
std::vector<ZeroCluster<Scalar>> right_null_vectors(const Realization<Scalar>& r, const Tolerances<Scalar>& tol) {
  std::vector<std::string> warnings;
  return analyze_right(r, tol, warnings, nullptr);
}

template <class Scalar>
InfiniteBasis<Scalar> infinite_zero_basis(const Realization<Scalar>& r, int rd) {
  const int n = r.n();
  InfiniteBasis<Scalar> ib{Mat<Scalar>::Zero(n, rd), Vec<Scalar>::Zero(rd), Mat<Scalar>(n, rd)};
  if (rd == 0) return ib;
  ib.p(0) = Scalar(1);
  Vec<Scalar> v = r.c;
  for (int j = 1; j < rd; ++j) {
    ib.P.col(j) = v;
    v = r.A.transpose() * v;
  }
  ib.P_hat = r.A.transpose() * ib.P + r.c * ib.p.transpose();
  return ib;
}

template <class Scalar>
Scalar null_residual(const Realization<Scalar>& r, const NullBlock<Scalar>& blk) {
  if (blk.k() == 0) return Scalar(0);
  const Scalar scale = std::sqrt(r.A.squaredNorm() + r.b.squaredNorm() + r.c.squaredNorm() + r.d * r.d);
  const Mat<Scalar> top = blk.S.transpose() * r.A + blk.f * r.c.transpose() -
                          blk.Lambda.transpose() * blk.S.transpose();
  const Vec<Scalar> last = blk.S.transpose() * r.b + blk.f * r.d;
  return std::sqrt(top.squaredNorm() + last.squaredNorm()) / std::max(scale, Scalar(1e-300));
}

template <class Scalar>
ZeroData<Scalar> zero_data(const Realization<Scalar>& r, const Tolerances<Scalar>& tol) {
  using C = std::complex<Scalar>;
  ZeroData<Scalar> zd;
  const int n = r.n();
  zd.clusters = analyze_right(r.dual(), tol, zd.warnings, &zd.relative_degree);
  std::vector<const ZeroCluster<Scalar>*> st, ax, un;
  for (auto& c : zd.clusters) {
    zd.zeros.push_back({c.value, c.multiplicity, c.klass});
    if (c.value.imag() != Scalar(0)) zd.zeros.push_back({std::conj(c.value), c.multiplicity, c.klass});
    if (c.klass == ZeroClass::Stable) st.push_back(&c);
    if (c.klass == ZeroClass::Unstable) un.push_back(&c);
    if (c.klass != ZeroClass::Imaginary) continue;
    if (c.kind == BlockKind::ComplexPair) {
      // Axis pair: snap the real part so the block is [[0, w], [-w, 0]].
      c.Lambda(0, 0) = c.Lambda(1, 1) = Scalar(0);
      zd.imag_pairs.push_back({C(0, c.value.imag()),
                               c.S.col(0).template cast<C>() + C(0, 1) * c.S.col(1).template cast<C>(),
                               C(c.f(0), c.f(1)), false});
    } else if (c.kind == BlockKind::Real) {
      c.Lambda(0, 0) = Scalar(0);
      zd.imag_pairs.push_back({C(0), c.S.col(0).template cast<C>(), C(c.f(0)), true});
    } else {
      zd.unsupported_axis = true;
      zd.warnings.push_back("repeated imaginary-axis zero is not supported");
    }
    ax.push_back(&c);
  }
  std::sort(zd.zeros.begin(), zd.zeros.end(), [](const auto& a, const auto& b) {
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.value.imag() < b.value.imag();
  });
  zd.minus = stack(st, n);
  zd.plus = stack(un, n);
  zd.axis = stack(ax, n);
  zd.infinite = infinite_zero_basis(r, zd.relative_degree);

  zd.residual = std::max({null_residual(r, zd.minus), null_residual(r, zd.plus), null_residual(r, zd.axis)});
  if (zd.residual > tol.residual_rel * Scalar(1e3))
    throw Error(Errc::NullspaceExtractionFailure, "null-vector residual too large");
  if (zd.residual > tol.residual_rel) zd.warnings.push_back("null-vector residual above tolerance");

  const NullBlock<Scalar> all = zd.all();
  if (all.k() > 0) {
    Eigen::JacobiSVD<Mat<Scalar>> svd(all.S);
    const auto& sv = svd.singularValues();
    zd.cond_S = sv(sv.size() - 1) > Scalar(0) ? sv(0) / sv(sv.size() - 1)
                                              : std::numeric_limits<Scalar>::infinity();
  }
  return zd;
}

template <class Scalar>
Partition<Scalar> partition_zeros(const ZeroData<Scalar>& zd) {
  return {zd.minus, zd.plus, zd.imag_pairs, zd.k_minus(), zd.k_plus()};
}

#define HINF_INSTANTIATE(S)                                                                        \
  template struct ZeroData<S>;                                                                     \
  template int relative_degree(const Realization<S>&, const Tolerances<S>&);                       \
  template std::vector<InvariantZero<S>> compute_zeros(const Realization<S>&, const Tolerances<S>&); \
  template std::vector<ZeroCluster<S>> left_null_vectors(const Realization<S>&, const Tolerances<S>&); \
  template std::vector<ZeroCluster<S>> right_null_vectors(const Realization<S>&, const Tolerances<S>&); \
  template InfiniteBasis<S> infinite_zero_basis(const Realization<S>&, int);                       \
  template S null_residual(const Realization<S>&, const NullBlock<S>&);                            \
  template ZeroData<S> zero_data(const Realization<S>&, const Tolerances<S>&);                     \
  template Partition<S> partition_zeros(const ZeroData<S>&);

HINF_INSTANTIATE(double)
HINF_INSTANTIATE(long double)

}  // namespace hinf
