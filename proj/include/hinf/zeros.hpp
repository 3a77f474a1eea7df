#pragma once

#include "hinf/plant.hpp"

#include <string>
#include <vector>

namespace hinf {

enum class ZeroClass { Stable, Imaginary, Unstable };

std::string_view to_string(ZeroClass k);

template <class Scalar>
struct InvariantZero {
  std::complex<Scalar> value;
  int multiplicity = 1;
  ZeroClass klass = ZeroClass::Unstable;
};

/// How a cluster of equal zeros was brought to canonical form.
enum class BlockKind { Real, ComplexPair, JordanChain, Semisimple, Schur };

/// One cluster of (numerically) equal zeros with its null-vector block.
/// Left convention: S^T A + f c^T = Lambda^T S^T and S^T b + f d = 0.
template <class Scalar>
struct ZeroCluster {
  std::complex<Scalar> value;
  int multiplicity = 1;
  ZeroClass klass = ZeroClass::Unstable;
  BlockKind kind = BlockKind::Real;
  Mat<Scalar> S;
  Vec<Scalar> f;
  Mat<Scalar> Lambda;
};

/// Null-vector block (S, f, Lambda); empty when k = 0.
template <class Scalar>
struct NullBlock {
  Mat<Scalar> S;
  Vec<Scalar> f;
  Mat<Scalar> Lambda;

  int k() const { return static_cast<int>(S.cols()); }
};

/// Imaginary-axis zero lambda (Im >= 0) with complex left null vector:
/// s^T A + f c^T = lambda s^T, s^T b + f d = 0.
template <class Scalar>
struct ImagPair {
  std::complex<Scalar> lambda;
  CVec<Scalar> s;
  std::complex<Scalar> f;
  bool real_zero = false;  ///< lambda = 0, a single real zero
};

/// Chain basis for the infinite zeros: P = (0, c, A^T c, ..., (A^T)^{r-2} c),
/// p = e_1, and P_hat = A^T P + c p^T = (c, ..., (A^T)^{r-1} c).
template <class Scalar>
struct InfiniteBasis {
  Mat<Scalar> P;
  Vec<Scalar> p;
  Mat<Scalar> P_hat;
};

template <class Scalar>
struct ZeroData {
  std::vector<InvariantZero<Scalar>> zeros;
  int relative_degree = 0;
  std::vector<ZeroCluster<Scalar>> clusters;
  NullBlock<Scalar> minus;  ///< stable zeros
  NullBlock<Scalar> plus;   ///< unstable zeros
  NullBlock<Scalar> axis;   ///< imaginary-axis zeros, stacked real form
  std::vector<ImagPair<Scalar>> imag_pairs;
  InfiniteBasis<Scalar> infinite;
  bool unsupported_axis = false;  ///< repeated imaginary-axis zeros present
  Scalar residual = Scalar(0);    ///< max block residual / ||M||_F
  Scalar cond_S = Scalar(1);      ///< cond([S_- S_0 S_+]), square when d != 0
  std::vector<std::string> warnings;

  int k_minus() const { return minus.k(); }
  int k_plus() const { return plus.k(); }
  /// All finite zeros: [S_- S_0 S_+], stacked f and block diagonal Lambda.
  NullBlock<Scalar> all() const;
};

/// 0 when d != 0, else the smallest r with c^T A^{r-1} b != 0.
/// Throws IdenticallyZeroChannel when the transfer function vanishes.
template <class Scalar>
int relative_degree(const Realization<Scalar>& r, const Tolerances<Scalar>& tol = {});

/// Finite invariant zeros sorted by (Re, Im), conjugates listed separately.
template <class Scalar>
std::vector<InvariantZero<Scalar>> compute_zeros(const Realization<Scalar>& r,
                                                 const Tolerances<Scalar>& tol = {});

/// Left null data (S, f, Lambda) of r per cluster.
template <class Scalar>
std::vector<ZeroCluster<Scalar>> left_null_vectors(const Realization<Scalar>& r,
                                                   const Tolerances<Scalar>& tol = {});

/// Right null data: A T + b g^T = T Omega and c^T T + d g^T = 0.
template <class Scalar>
std::vector<ZeroCluster<Scalar>> right_null_vectors(const Realization<Scalar>& r,
                                                    const Tolerances<Scalar>& tol = {});

template <class Scalar>
InfiniteBasis<Scalar> infinite_zero_basis(const Realization<Scalar>& r, int relative_degree);

/// Full left-null analysis of a realization: zeros, partition by class,
/// imaginary-axis pairs and the infinite-zero basis.
template <class Scalar>
ZeroData<Scalar> zero_data(const Realization<Scalar>& r, const Tolerances<Scalar>& tol = {});

template <class Scalar>
struct Partition {
  NullBlock<Scalar> minus, plus;
  std::vector<ImagPair<Scalar>> imag_pairs;
  int k_minus = 0, k_plus = 0;
};

template <class Scalar>
Partition<Scalar> partition_zeros(const ZeroData<Scalar>& zd);

/// max_i ||(S^T f) M - Lambda^T (S^T 0)||_F / ||M||_F over a block.
template <class Scalar>
Scalar null_residual(const Realization<Scalar>& r, const NullBlock<Scalar>& blk);

}  // namespace hinf
