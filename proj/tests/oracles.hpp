#pragma once

// Reference implementations used only by the tests. Everything here is
// written from the definitions with explicit loops and shares no code with
// the library, except that V is taken as an input: f_L is defined through a
// concrete V, so the oracle must see the same one.

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#ifdef __SIZEOF_FLOAT128__
namespace Eigen {
template <>
struct NumTraits<__float128> : GenericNumTraits<__float128> {
  // 2^-112
  static inline __float128 epsilon() {
    const __float128 two56 = static_cast<__float128>(1ULL << 56);
    return 1 / (two56 * two56);
  }
  static inline __float128 dummy_precision() { return epsilon() * 10000; }
  static inline int digits10() { return 33; }
  static inline int max_digits10() { return 36; }
};
}  // namespace Eigen
#endif

namespace oracle {

#ifdef __SIZEOF_FLOAT128__
using Quad = __float128;
#else
using Quad = long double;
#endif

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

inline long tri(long k) { return k * (k + 1) / 2; }

// Closed-form packed index of L(i, j), 1-based, for j <= i.
inline long ltriag_index(long n, long i, long j) { return n * j - n - tri(j) + i + 1; }

inline long tri_len_ref(long n, long d) {
  long count = 0;
  for (long j = 0; j < d; ++j) {
    for (long i = j; i < n - 1; ++i) ++count;
  }
  return count;
}

template <class T>
Mat<T> lindenstrauss(const Mat<T>& G) {
  const long n = G.rows();
  Mat<T> K(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) K(i, j) = G(i, i) + G(j, j) - T(2) * G(i, j);
  return K;
}

template <class T>
Mat<T> lindenstrauss_adjoint(const Mat<T>& S) {
  const long n = S.rows();
  Mat<T> K(n, n);
  for (long i = 0; i < n; ++i) {
    T row = 0;
    for (long j = 0; j < n; ++j) row += S(i, j);
    for (long j = 0; j < n; ++j) K(i, j) = -T(2) * S(i, j);
    K(i, i) += T(2) * row;
  }
  return K;
}

template <class T>
Mat<T> edm(const Mat<T>& P) {
  const long n = P.rows();
  Mat<T> D(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      T s = 0;
      for (long a = 0; a < P.cols(); ++a) s += (P(i, a) - P(j, a)) * (P(i, a) - P(j, a));
      D(i, j) = s;
    }
  return D;
}

template <class T>
T value_p(const Mat<T>& P, const Mat<T>& D) {
  const Mat<T> F = edm(P) - D;
  T s = 0;
  for (long i = 0; i < F.rows(); ++i)
    for (long j = 0; j < F.cols(); ++j) s += F(i, j) * F(i, j);
  return s / T(2);
}

// d f / d p_i = 4 sum_j F_ij (p_i - p_j), flattened column-major.
template <class T>
Vec<T> gradient_p(const Mat<T>& P, const Mat<T>& D) {
  const long n = P.rows();
  const long d = P.cols();
  const Mat<T> F = edm(P) - D;
  Vec<T> g = Vec<T>::Zero(n * d);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      for (long a = 0; a < d; ++a) g(i + n * a) += T(4) * F(i, j) * (P(i, a) - P(j, a));
  return g;
}

// Each ordered pair contributes (1/2) F_ij^2; with delta = p_i - p_j its
// Hessian in delta is 4 delta delta^T + 2 F_ij I, scattered with signs.
template <class T>
Mat<T> hessian_p(const Mat<T>& P, const Mat<T>& D) {
  const long n = P.rows();
  const long d = P.cols();
  const Mat<T> F = edm(P) - D;
  Mat<T> H = Mat<T>::Zero(n * d, n * d);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      if (i == j) continue;
      for (long a = 0; a < d; ++a)
        for (long b = 0; b < d; ++b) {
          T blk = T(4) * (P(i, a) - P(j, a)) * (P(i, b) - P(j, b));
          if (a == b) blk += T(2) * F(i, j);
          H(i + n * a, i + n * b) += blk;
          H(j + n * a, j + n * b) += blk;
          H(i + n * a, j + n * b) -= blk;
          H(j + n * a, i + n * b) -= blk;
        }
    }
  return H;
}

// Linear map x -> vec(P) for the three coordinate systems (0: P, 1: L, 2: ell).
template <class T>
Mat<T> lift_matrix(int formulation, long n, long d, const Eigen::MatrixXd& V) {
  const long nd = n * d;
  if (formulation == 0) return Mat<T>::Identity(nd, nd);
  const long m = n - 1;
  std::vector<std::pair<long, long>> slots;   // (row, col) of L, 0-based
  if (formulation == 1) {
    for (long j = 0; j < d; ++j)
      for (long i = 0; i < m; ++i) slots.emplace_back(i, j);
  } else {
    const long len = tri_len_ref(n, d);
    slots.assign(static_cast<std::size_t>(len), {-1, -1});
    for (long j = 1; j <= d; ++j)
      for (long i = j; i <= m; ++i)
        slots[static_cast<std::size_t>(ltriag_index(n, i, j) - 1)] = {i - 1, j - 1};
  }
  Mat<T> M = Mat<T>::Zero(nd, static_cast<long>(slots.size()));
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const auto [r, c] = slots[k];
    for (long p = 0; p < n; ++p) M(p + n * c, static_cast<long>(k)) = T(V(p, r));
  }
  return M;
}

template <class T>
struct Objective {
  Mat<T> D;
  Mat<T> M;   // lift
  long n;
  long d;

  Objective(int formulation, const Eigen::MatrixXd& Dd, long d_, const Eigen::MatrixXd& V)
      : D(Dd.cast<T>()), M(lift_matrix<T>(formulation, Dd.rows(), d_, V)),
        n(Dd.rows()), d(d_) {}

  Mat<T> config(const Vec<T>& x) const {
    const Vec<T> p = M * x;
    Mat<T> P(n, d);
    for (long a = 0; a < d; ++a)
      for (long i = 0; i < n; ++i) P(i, a) = p(i + n * a);
    return P;
  }
  T value(const Vec<T>& x) const { return value_p<T>(config(x), D); }
  Vec<T> gradient(const Vec<T>& x) const { return M.transpose() * gradient_p<T>(config(x), D); }
  Mat<T> hessian(const Vec<T>& x) const {
    return M.transpose() * hessian_p<T>(config(x), D) * M;
  }
};

// Gaussian elimination with partial pivoting; works for any field type.
template <class T>
Vec<T> solve(Mat<T> A, Vec<T> b) {
  const long m = A.rows();
  auto mag = [](const T& v) { return v < T(0) ? -v : v; };
  for (long k = 0; k < m; ++k) {
    long piv = k;
    for (long i = k + 1; i < m; ++i)
      if (mag(A(i, k)) > mag(A(piv, k))) piv = i;
    if (piv != k) {
      A.row(k).swap(A.row(piv));
      std::swap(b(k), b(piv));
    }
    for (long i = k + 1; i < m; ++i) {
      const T factor = A(i, k) / A(k, k);
      for (long j = k; j < m; ++j) A(i, j) -= factor * A(k, j);
      b(i) -= factor * b(k);
    }
  }
  Vec<T> x(m);
  for (long i = m - 1; i >= 0; --i) {
    T s = b(i);
    for (long j = i + 1; j < m; ++j) s -= A(i, j) * x(j);
    x(i) = s / A(i, i);
  }
  return x;
}

template <class T>
double norm(const Vec<T>& v) {
  T s = 0;
  for (long i = 0; i < v.size(); ++i) s += v(i) * v(i);
  return std::sqrt(static_cast<double>(s));
}

// Newton in quad precision from a double point; returns x* - x0 rounded to
// double after the subtraction, so tiny offsets keep their digits.
inline Eigen::VectorXd quad_newton_offset(int formulation, const Eigen::MatrixXd& D, long d,
                                          const Eigen::MatrixXd& V,
                                          const Eigen::VectorXd& x0, int steps,
                                          double* final_grad = nullptr) {
  const Objective<Quad> obj(formulation, D, d, V);
  const Vec<Quad> start = x0.cast<Quad>();
  Vec<Quad> x = start;
  for (int k = 0; k < steps; ++k) x -= solve<Quad>(obj.hessian(x), obj.gradient(x));
  if (final_grad) *final_grad = norm<Quad>(obj.gradient(x));
  const Vec<Quad> off = x - start;
  Eigen::VectorXd out(off.size());
  for (long i = 0; i < off.size(); ++i) out(i) = static_cast<double>(off(i));
  return out;
}

// Central differences with step 1e-5 (1 + |x_i|).
template <class F>
Eigen::VectorXd fd_gradient(F&& f, const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd y = x;
  for (long i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x(i)));
    y(i) = x(i) + h;
    const double fp = f(y);
    y(i) = x(i) - h;
    const double fm = f(y);
    y(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace oracle
