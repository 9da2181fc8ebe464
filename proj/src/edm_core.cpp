#include "edmstress/edm_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

namespace edmstress {

namespace {

constexpr double kSymmetryTol = 1e-12;

void require_square(const Matrix& M, const char* what) {
  if (M.rows() != M.cols()) {
    std::ostringstream msg;
    msg << what << ": expected a square matrix, got " << M.rows() << "x"
        << M.cols();
    throw DimensionError(msg.str());
  }
}

void require_symmetric(const Matrix& M, const char* what) {
  require_square(M, what);
  const double scale = 1.0 + M.cwiseAbs().maxCoeff();
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * scale) {
    std::ostringstream msg;
    msg << what << ": input is not symmetric (max asymmetry " << asym << ")";
    throw SymmetryError(msg.str());
  }
}

[[noreturn]] void invalid(const std::string& invariant) {
  throw ValidationError("instance violates invariant: " + invariant);
}

} // namespace

namespace detail {

Matrix lindenstrauss_unchecked(const Matrix& G) {
  const Index n = G.rows();
  const Vector diag = G.diagonal();
  Matrix D(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      D(i, j) = diag(i) + diag(j) - 2.0 * G(i, j);
    }
    D(j, j) = 0.0;
  }
  return D;
}

Matrix lindenstrauss_adjoint_unchecked(const Matrix& S) {
  Matrix out = -2.0 * S;
  out.diagonal() += 2.0 * S.rowwise().sum();
  return out;
}

} // namespace detail

Matrix lindenstrauss(const Matrix& G) {
  require_symmetric(G, "lindenstrauss");
  return detail::lindenstrauss_unchecked(G);
}

Matrix lindenstrauss_adjoint(const Matrix& S) {
  require_symmetric(S, "lindenstrauss_adjoint");
  return detail::lindenstrauss_adjoint_unchecked(S);
}

Matrix edm_of(const Matrix& P) {
  const Index n = P.rows();
  Matrix D = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      const double dist2 = (P.row(i) - P.row(j)).squaredNorm();
      D(i, j) = dist2;
      D(j, i) = dist2;
    }
  }
  return D;
}

Matrix build_v(Index n) {
  if (n < 2) {
    throw DomainError("build_v: need n >= 2, got " + std::to_string(n));
  }
  Vector v = Vector::Ones(n);
  v(0) -= std::sqrt(static_cast<double>(n));
  const double vtv = v.squaredNorm();
  Matrix V(n, n - 1);
  for (Index j = 1; j < n; ++j) {
    V.col(j - 1) = (-2.0 * v(j) / vtv) * v;
    V(j, j - 1) += 1.0;
  }
  return V;
}

Index tri_len(Index n, Index d) {
  if (n < 2 || d < 1) {
    throw DomainError("tri_len: need n >= 2 and d >= 1");
  }
  if (d >= n - 1) return tri_number(n - 1);
  return (n - 1) * d - tri_number(d - 1);
}

Matrix ltriag(const Vector& ell, Index n, Index d) {
  const Index expected = tri_len(n, d);
  if (ell.size() != expected) {
    std::ostringstream msg;
    msg << "ltriag: expected vector of length " << expected << " for (n=" << n
        << ", d=" << d << "), got " << ell.size();
    throw DomainError(msg.str());
  }
  Matrix L = Matrix::Zero(n - 1, d);
  Index k = 0;
  for (Index j = 0; j < d; ++j) {
    for (Index i = j; i < n - 1; ++i) L(i, j) = ell(k++);
  }
  return L;
}

Vector ltriag_adjoint(const Matrix& L) {
  const Index rows = L.rows();
  const Index d = L.cols();
  if (rows < 1 || d < 1) throw DimensionError("ltriag_adjoint: empty matrix");
  Vector ell(tri_len(rows + 1, d));
  Index k = 0;
  for (Index j = 0; j < d; ++j) {
    for (Index i = j; i < rows; ++i) ell(k++) = L(i, j);
  }
  return ell;
}

Matrix center(const Matrix& P) {
  const Eigen::RowVectorXd mean = P.colwise().mean();
  return P.rowwise() - mean;
}

TriangularReduction reduce_to_triangular(const Matrix& L) {
  const Index rows = L.rows();
  const Index d = L.cols();
  if (rows < 1 || d < 1) {
    throw DimensionError("reduce_to_triangular: empty matrix");
  }
  const Matrix Lt = L.transpose();
  Eigen::HouseholderQR<Matrix> qr(Lt);
  Matrix Q = qr.householderQ() * Matrix::Identity(d, d);
  Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();

  const Index pivots = std::min(rows, d);
  double max_pivot = 0.0;
  double min_pivot = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < pivots; ++k) {
    if (R(k, k) < 0.0) {
      R.row(k) *= -1.0;
      Q.col(k) *= -1.0;
    }
    max_pivot = std::max(max_pivot, R(k, k));
    min_pivot = std::min(min_pivot, R(k, k));
  }

  TriangularReduction out;
  out.ell = ltriag_adjoint(R.transpose());
  out.Q = std::move(Q);
  out.rank_deficient = pivots < d || !(min_pivot > 1e-8 * max_pivot);
  return out;
}

void validate_instance(const Instance& instance, bool strict) {
  const Index n = instance.n;
  const Index d = instance.d;
  if (n < 2) invalid("n >= 2");
  if (d < 1) invalid("d >= 1");
  const Matrix& D = instance.D;
  if (D.rows() != n || D.cols() != n) invalid("D is n x n");
  if (!D.allFinite()) invalid("D entries are finite");
  const double scale = 1.0 + D.cwiseAbs().maxCoeff();
  if ((D - D.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    invalid("D is symmetric");
  }
  if (D.diagonal().cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    invalid("D has zero diagonal");
  }
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i != j && D(i, j) < 0.0) invalid("D entries are nonnegative");
    }
  }
  if (instance.P_bar) {
    const Matrix& P = *instance.P_bar;
    if (P.rows() != n || P.cols() != d) invalid("P_bar is n x d");
    if (!P.allFinite()) invalid("P_bar entries are finite");
    const double mismatch = (edm_of(P) - D).cwiseAbs().maxCoeff();
    if (mismatch > kSymmetryTol * scale) {
      invalid("D equals the squared-distance matrix of P_bar");
    }
  }
  if (strict) {
    Matrix J = Matrix::Identity(n, n);
    J.array() -= 1.0 / static_cast<double>(n);
    const Matrix G = -0.5 * J * D * J;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(G, Eigen::EigenvaluesOnly);
    const Vector& lam = eig.eigenvalues();
    const double top = std::max(1.0, lam.cwiseAbs().maxCoeff());
    if (lam.minCoeff() < -1e-10 * top) {
      invalid("centered Gram matrix of D is positive semidefinite");
    }
    const Index rank = (lam.array() > 1e-10 * top).count();
    if (rank > d) invalid("centered Gram matrix of D has rank <= d");
  }
}

Instance instance_from_points(const Matrix& P, std::uint64_t seed) {
  Instance out;
  out.n = P.rows();
  out.d = P.cols();
  out.D = edm_of(P);
  out.P_bar = P;
  out.seed = seed;
  return out;
}

Instance generate_instance(Index n, Index d, std::uint64_t seed) {
  if (n < 2 || d < 1) {
    throw DomainError("generate_instance: need n >= 2 and d >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix P(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) P(i, j) = normal(rng);
  }
  return instance_from_points(center(P), seed);
}

} // namespace edmstress
