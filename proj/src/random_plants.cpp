#include "hinf/random_plants.hpp"

#include <Eigen/Eigenvalues>

namespace hinf {

namespace {

using C = std::complex<double>;

bool coin(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

double pick(std::mt19937_64& rng, std::initializer_list<double> values) {
  std::uniform_int_distribution<std::size_t> u(0, values.size() - 1);
  return *(values.begin() + u(rng));
}

Mat<double> gaussian_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat<double> M(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) M(i, j) = nd(rng);
  return M;
}

std::vector<C> eigenvalues(const Mat<double>& A) {
  Eigen::EigenSolver<Mat<double>> es(A, false);
  return {es.eigenvalues().data(), es.eigenvalues().data() + A.rows()};
}

double ascending(const std::vector<double>& desc, int j) { return desc[desc.size() - 1 - j]; }

// T with A = T Ac T^-1 and b = T e_n, Ac the companion matrix of det(sI - A).
struct Canonical {
  Mat<double> T;
  std::vector<double> charpoly;  // descending, monic
};

Canonical canonical(const Mat<double>& A, const Vec<double>& b) {
  const int n = static_cast<int>(A.rows());
  Canonical cf;
  cf.charpoly = poly_from_roots<double>(eigenvalues(A));
  Mat<double> Ac = Mat<double>::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) Ac(i, i + 1) = 1.0;
  for (int j = 0; j < n; ++j) Ac(n - 1, j) = -ascending(cf.charpoly, j);
  Mat<double> Ctrb(n, n), Cc(n, n);
  Vec<double> v = b, w = Vec<double>::Unit(n, n - 1);
  for (int k = 0; k < n; ++k) {
    Ctrb.col(k) = v;
    Cc.col(k) = w;
    v = A * v;
    w = Ac * w;
  }
  Eigen::JacobiSVD<Mat<double>> svd(Ctrb);
  const auto& s = svd.singularValues();
  if (!(s(n - 1) > 1e-9 * s(0))) throw Error(Errc::DegenerateRealization, "(A, b) is not controllable");
  cf.T = Ctrb * Cc.inverse();
  return cf;
}

// Roots of the numerator of c^T (sI - A)^-1 b + d, read off the
// controllable canonical form.
std::vector<C> transfer_zeros(const Mat<double>& A, const Vec<double>& b, const Vec<double>& c, double d) {
  const int n = static_cast<int>(A.rows());
  const Canonical cf = canonical(A, b);
  const Vec<double> cc = cf.T.transpose() * c;
  std::vector<double> num(n + 1);  // ascending
  for (int j = 0; j < n; ++j) num[j] = cc(j) + d * ascending(cf.charpoly, j);
  num[n] = d;
  double big = 0.0;
  for (double x : num) big = std::max(big, std::abs(x));
  int deg = n;
  while (deg > 0 && std::abs(num[deg]) <= 1e-10 * big) --deg;
  if (deg == 0) return {};
  Mat<double> M = Mat<double>::Zero(deg, deg);
  for (int i = 0; i + 1 < deg; ++i) M(i + 1, i) = 1.0;
  for (int i = 0; i < deg; ++i) M(i, deg - 1) = -num[i] / num[deg];
  return eigenvalues(M);
}

// Reflects roots across the imaginary axis onto the requested side, at
// least 0.1 away from it.
std::vector<C> reflect(std::vector<C> zeros, bool to_unstable) {
  for (C& z : zeros) {
    const double re = std::max(std::abs(z.real()), 0.1);
    z = C(to_unstable ? re : -re, z.imag());
  }
  return zeros;
}

// Replaces the conjugate pair or the two real roots nearest the axis by
// +-jw, w their geometric mean modulus clamped to [0.3, 3].
std::vector<C> with_axis_pair(const std::vector<C>& zeros) {
  int pair = -1;
  std::vector<int> reals;
  for (int i = 0; i < static_cast<int>(zeros.size()); ++i) {
    if (zeros[i].imag() > 0.0 && (pair < 0 || std::abs(zeros[i].real()) < std::abs(zeros[pair].real()))) pair = i;
    if (zeros[i].imag() == 0.0) reals.push_back(i);
  }
  std::sort(reals.begin(), reals.end(),
            [&](int a, int b) { return std::abs(zeros[a].real()) < std::abs(zeros[b].real()); });
  const double pair_cost = pair >= 0 ? std::abs(zeros[pair].real()) : INFINITY;
  const double real_cost = reals.size() >= 2 ? std::abs(zeros[reals[1]].real()) : INFINITY;
  if (pair < 0 && reals.size() < 2) throw Error(Errc::DegenerateRealization, "fewer than two zeros");

  std::vector<C> rest;
  double w = 0.0;
  if (pair_cost <= real_cost) {
    w = std::abs(zeros[pair]);
    for (const C& z : zeros)
      if (z != zeros[pair] && z != std::conj(zeros[pair])) rest.push_back(z);
  } else {
    w = std::sqrt(std::abs(zeros[reals[0]].real() * zeros[reals[1]].real()));
    for (int i = 0; i < static_cast<int>(zeros.size()); ++i)
      if (i != reals[0] && i != reals[1]) rest.push_back(zeros[i]);
  }
  w = std::clamp(w, 0.3, 3.0);
  rest.push_back(C(0.0, w));
  rest.push_back(C(0.0, -w));
  return rest;
}

bool away_from(const std::vector<C>& zeros, const std::vector<C>& poles, double gap) {
  for (const C& z : zeros)
    for (const C& p : poles)
      if (std::abs(z - p) < gap) return false;
  return true;
}

bool has_stable(const std::vector<C>& zeros) {
  return std::any_of(zeros.begin(), zeros.end(), [](const C& z) { return z.real() < 0.0; });
}

bool off_axis(const std::vector<C>& zeros) {
  return std::all_of(zeros.begin(), zeros.end(), [](const C& z) { return std::abs(z.real()) >= 0.05; });
}

// Gaussian / sqrt(n), shifted so that u eigenvalues lie in the open right
// half plane, all at least 0.1 from the axis.
Mat<double> shifted_gaussian(std::mt19937_64& rng, int n) {
  for (;;) {
    Mat<double> A = gaussian_matrix(rng, n, n) / std::sqrt(double(n));
    std::vector<double> re;
    for (const C& l : eigenvalues(A)) re.push_back(l.real());
    std::sort(re.begin(), re.end());
    const int u = std::uniform_int_distribution<int>(0, n / 2)(rng);
    const double shift = u == 0 ? re.back() + 0.3 : (re[n - u] + re[n - u - 1]) / 2.0;
    if (std::any_of(re.begin(), re.end(), [&](double r) { return std::abs(r - shift) < 0.1; })) continue;
    A.diagonal().array() -= shift;
    return A;
  }
}

// Drops the real zero of largest modulus, if any.
bool drop_largest_real(std::vector<C>& zeros) {
  auto key = [](const C& z) { return z.imag() == 0.0 ? std::abs(z) : -1.0; };
  auto it = std::max_element(zeros.begin(), zeros.end(), [&](const C& a, const C& b) { return key(a) < key(b); });
  if (it == zeros.end() || it->imag() != 0.0) return false;
  zeros.erase(it);
  return true;
}

}  // namespace

Vec<double> place_zeros(const Mat<double>& A, const Vec<double>& b, const std::vector<C>& zeros, double d,
                        double kappa) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(zeros.size());
  if (d != 0.0 ? m != n : m >= n)
    throw Error(Errc::InvalidPlant, "zero count does not match the feedthrough");
  const Canonical cf = canonical(A, b);
  const std::vector<double> q = poly_from_roots<double>(zeros);
  Vec<double> cc = Vec<double>::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (d != 0.0) cc(j) = d * (ascending(q, j) - ascending(cf.charpoly, j));
    else if (j <= m) cc(j) = kappa * ascending(q, j);
  }
  return cf.T.transpose().fullPivLu().solve(cc);
}

RandomPlant random_plant(const RandomPlantSpec& spec, std::mt19937_64& rng) {
  const int n = spec.target == GammaCase::Case3 ? std::max(spec.n, 2) : spec.n;
  if (n < 1) throw Error(Errc::InvalidPlant, "random plant needs n >= 1");
  const std::initializer_list<double> any{0.0, 0.5, -0.5, 1.0, -1.0};
  const std::initializer_list<double> nonzero{0.5, -0.5, 1.0, -1.0};
  const bool singular = !spec.all_stable && spec.target == GammaCase::Case4;

  for (;;) {
    RandomPlant out;
    out.target = spec.target;
    out.all_stable = spec.all_stable;
    auto& p = out.plant;
    p.n = n;
    p.A = shifted_gaussian(rng, n);
    p.b1 = gaussian_matrix(rng, n, 1);
    p.b2 = gaussian_matrix(rng, n, 1);
    p.c1 = gaussian_matrix(rng, n, 1);
    p.c2 = gaussian_matrix(rng, n, 1);
    p.d11 = pick(rng, any);
    p.d12 = singular ? 0.0 : pick(rng, nonzero);
    p.d21 = singular ? pick(rng, any) : pick(rng, nonzero);
    const Mat<double> At = p.A.transpose();
    try {
      auto zu = transfer_zeros(p.A, p.b2, p.c1, p.d12);
      auto yw = transfer_zeros(At, p.c2, p.b1, p.d21);
      if (spec.all_stable || spec.target == GammaCase::Case1) {
        zu = reflect(zu, !spec.all_stable);
        yw = reflect(yw, !spec.all_stable);
        p.c1 = place_zeros(p.A, p.b2, zu, p.d12);
        p.b1 = place_zeros(At, p.c2, yw, p.d21);
      } else if (spec.target == GammaCase::Case2) {
        if (!has_stable(zu) && !has_stable(yw)) continue;
      } else if (spec.target == GammaCase::Case3) {
        zu = with_axis_pair(zu);
        p.c1 = place_zeros(p.A, p.b2, zu, p.d12);
      } else if (coin(rng, 0.5) && drop_largest_real(zu)) {
        p.c1 = place_zeros(p.A, p.b2, zu, 0.0, pick(rng, nonzero));  // relative degree 2
      }
      std::vector<C> finite = zu;
      finite.insert(finite.end(), yw.begin(), yw.end());
      if (!away_from(finite, eigenvalues(p.A), 0.05)) continue;
      if (!off_axis(yw) || (spec.target != GammaCase::Case3 && !off_axis(zu))) continue;
      if (std::max(p.c1.norm(), p.b1.norm()) > spec.coefficient_cap) continue;
      out.zu_zeros = zu;
      out.yw_zeros = yw;
      return out;
    } catch (const Error& e) {
      if (e.code() != Errc::DegenerateRealization) throw;
    }
  }
}

std::vector<RandomPlant> random_suite(std::uint64_t seed, int count, int n_min, int n_max) {
  static constexpr GammaCase cases[] = {GammaCase::Case1, GammaCase::Case2, GammaCase::Case3, GammaCase::Case4};
  std::vector<RandomPlant> suite;
  for (int i = 0; i < count; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    RandomPlantSpec spec;
    spec.target = cases[i % 4];
    spec.n = std::uniform_int_distribution<int>(n_min, n_max)(rng);
    suite.push_back(random_plant(spec, rng));
  }
  return suite;
}

}  // namespace hinf
