#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "edmstress/errors.hpp"

namespace edmstress {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Problem data: a target EDM of squared distances, optionally with the
/// configuration that generated it.
struct Instance {
  Index n = 0;
  Index d = 0;
  Matrix D;                      // n x n, squared distances
  std::optional<Matrix> P_bar;   // n x d generator, when known
  std::uint64_t seed = 0;
};

// Throws ValidationError naming the first violated invariant. With `strict`
// the centered Gram matrix must also be PSD with rank <= d.
void validate_instance(const Instance& instance, bool strict = false);

Instance instance_from_points(const Matrix& P, std::uint64_t seed = 0);

// Centered standard-normal generator points and their exact EDM.
Instance generate_instance(Index n, Index d, std::uint64_t seed);

// K(G) = diag(G) e^T + e diag(G)^T - 2G.
Matrix lindenstrauss(const Matrix& G);

// K*(S) = 2 (Diag(S e) - S).
Matrix lindenstrauss_adjoint(const Matrix& S);

// Pairwise squared distances of the rows of P.
Matrix edm_of(const Matrix& P);

// Orthonormal n x (n-1) basis of the complement of e: columns 2..n of the
// Householder reflector sending e to sqrt(n) e_1.
Matrix build_v(Index n);

constexpr Index tri_number(Index k) { return k * (k + 1) / 2; }

// Number of free entries of an (n-1) x d lower-trapezoidal matrix.
Index tri_len(Index n, Index d);

// Column-major packing of the lower-trapezoidal part of an (n-1) x d matrix.
Matrix ltriag(const Vector& ell, Index n, Index d);
Vector ltriag_adjoint(const Matrix& L);

// Subtracts the centroid from every row.
Matrix center(const Matrix& P);

struct TriangularReduction {
  Vector ell;
  Matrix Q;                  // d x d orthogonal, L = ltriag(ell) Q^T
  bool rank_deficient = false;
};

// QR of L^T with nonnegative pivots.
TriangularReduction reduce_to_triangular(const Matrix& L);

namespace detail {

// Unchecked versions for internal hot paths; inputs must be symmetric.
Matrix lindenstrauss_unchecked(const Matrix& G);
Matrix lindenstrauss_adjoint_unchecked(const Matrix& S);

} // namespace detail

} // namespace edmstress
