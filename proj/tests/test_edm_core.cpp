#include <doctest.h>

#include <cmath>

#include "edmstress/edm_core.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace edmstress;
using testutil::normal_matrix;
using testutil::rel;
using testutil::symmetric;

TEST_CASE("lindenstrauss on small inputs") {
  CHECK(lindenstrauss(Matrix::Zero(2, 2)).norm() == 0.0);

  Matrix expect(2, 2);
  expect << 0, 2, 2, 0;
  CHECK(lindenstrauss(Matrix::Identity(2, 2)) == expect);

  Matrix P(2, 1);
  P << 0, 1;
  Matrix one(2, 2);
  one << 0, 1, 1, 0;
  CHECK(lindenstrauss(P * P.transpose()) == one);
}

TEST_CASE("lindenstrauss rejects bad shapes and asymmetry") {
  CHECK_THROWS_AS(lindenstrauss(Matrix::Zero(2, 3)), DimensionError);
  Matrix G = Matrix::Zero(3, 3);
  G(0, 1) = 1.0;
  CHECK_THROWS_AS(lindenstrauss(G), SymmetryError);
  CHECK_THROWS_AS(lindenstrauss_adjoint(G), SymmetryError);
}

TEST_CASE("lindenstrauss matches the elementwise definition") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix G = symmetric(6, seed);
    CHECK(rel(lindenstrauss(G), oracle::lindenstrauss<double>(G)) < 1e-15);
    CHECK(lindenstrauss(G).diagonal().cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("lindenstrauss_adjoint examples") {
  Matrix S(2, 2);
  S << 0, 1, 1, 0;
  Matrix expect(2, 2);
  expect << 2, -2, -2, 2;
  CHECK(lindenstrauss_adjoint(S) == expect);

  const Vector v = (Vector(2) << 1.0, 2.0).finished();
  CHECK(lindenstrauss_adjoint(Matrix(v.asDiagonal())).norm() == 0.0);
}

TEST_CASE("adjoint identity <K(G), S> = <G, K*(S)>") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Index n = 2 + static_cast<Index>(seed % 9);
    const Matrix G = symmetric(n, seed);
    const Matrix S = symmetric(n, seed + 1000);
    const double lhs = (lindenstrauss(G).cwiseProduct(S)).sum();
    const double rhs = (G.cwiseProduct(lindenstrauss_adjoint(S))).sum();
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + G.norm() * S.norm()));
    CHECK(rel(lindenstrauss_adjoint(S), oracle::lindenstrauss_adjoint<double>(S)) < 1e-15);
  }
}

TEST_CASE("K* has zero row sums and is PSD on nonnegative inputs") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index n = 2 + static_cast<Index>(seed % 7);
    const Matrix S = symmetric(n, seed);
    const Matrix K = lindenstrauss_adjoint(S);
    CHECK(K.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + S.norm()));

    const Matrix Sp = S.cwiseAbs();
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(lindenstrauss_adjoint(Sp));
    CHECK(eig.eigenvalues()(0) >= -1e-10 * (1.0 + Sp.norm()));

    const Vector v = testutil::normal_vector(n, seed + 7);
    CHECK(lindenstrauss_adjoint(Matrix(v.asDiagonal())).norm() == 0.0);
  }
}

TEST_CASE("edm_of") {
  Matrix P(3, 1);
  P << 0, 1, 3;
  Matrix expect(3, 3);
  expect << 0, 1, 9, 1, 0, 4, 9, 4, 0;
  CHECK(edm_of(P) == expect);

  Matrix same(4, 2);
  same.rowwise() = Eigen::RowVector2d(1.5, -2.0);
  CHECK(edm_of(same).norm() == 0.0);

  const Matrix Q = normal_matrix(7, 3, 11);
  CHECK(rel(edm_of(Q), oracle::edm<double>(Q)) < 1e-15);
  CHECK(rel(edm_of(Q), lindenstrauss(Q * Q.transpose())) < 1e-13);
}

TEST_CASE("build_v invariants for n = 2..64") {
  CHECK_THROWS_AS(build_v(1), DomainError);
  for (Index n = 2; n <= 64; ++n) {
    const Matrix V = build_v(n);
    REQUIRE(V.rows() == n);
    REQUIRE(V.cols() == n - 1);
    const Vector e = Vector::Ones(n);
    const double nd = static_cast<double>(n);
    CHECK((V.transpose() * V - Matrix::Identity(n - 1, n - 1)).norm() <= 1e-12);
    CHECK((V.transpose() * e).norm() <= 1e-12);
    CHECK((V * V.transpose() - (Matrix::Identity(n, n) - e * e.transpose() / nd)).norm() <= 1e-12);
  }
  const Matrix V2 = build_v(2);
  CHECK(std::abs(std::abs(V2(0, 0)) - 1.0 / std::sqrt(2.0)) < 1e-15);
  CHECK(V2(0, 0) == doctest::Approx(-V2(1, 0)));
  CHECK(build_v(9) == build_v(9));
}

TEST_CASE("tri_len branches") {
  CHECK(tri_len(100, 2) == 197);
  CHECK(tri_len(50, 1) == 49);
  CHECK(tri_len(3, 5) == 3);
  CHECK_THROWS_AS(tri_len(1, 1), DomainError);
  for (Index n = 2; n <= 12; ++n)
    for (Index d = 1; d <= 12; ++d) CHECK(tri_len(n, d) == oracle::tri_len_ref(n, d));
}

TEST_CASE("ltriag indexing is exhaustive and matches the closed form for n, d <= 12") {
  for (Index n = 2; n <= 12; ++n) {
    for (Index d = 1; d <= 12; ++d) {
      const Index len = tri_len(n, d);
      Vector ell(len);
      for (Index k = 0; k < len; ++k) ell(k) = static_cast<double>(k + 1);
      const Matrix L = ltriag(ell, n, d);
      REQUIRE(L.rows() == n - 1);
      REQUIRE(L.cols() == d);
      Index nonzeros = 0;
      bool ok = true;
      for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < n - 1; ++i) {
          if (i < j) {
            ok = ok && L(i, j) == 0.0;
            continue;
          }
          ++nonzeros;
          const long idx = oracle::ltriag_index(n, i + 1, j + 1);
          ok = ok && L(i, j) == static_cast<double>(idx);
        }
      }
      CHECK_MESSAGE(ok, "n=" << n << " d=" << d);
      CHECK(nonzeros == len);
      CHECK(ltriag_adjoint(L) == ell);
    }
  }
}

TEST_CASE("ltriag worked example and errors") {
  const Vector ell = (Vector(5) << 1, 2, 3, 4, 5).finished();
  Matrix expect(3, 2);
  expect << 1, 0, 2, 4, 3, 5;
  CHECK(ltriag(ell, 4, 2) == expect);

  const Vector col = (Vector(3) << 4, -1, 2).finished();
  CHECK(ltriag(col, 4, 1) == Matrix(col));
  CHECK_THROWS_AS(ltriag(Vector::Zero(4), 4, 2), DomainError);
}

TEST_CASE("ltriag adjointness and projection") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Index n = 2 + static_cast<Index>(seed % 10);
    const Index d = 1 + static_cast<Index>(seed % 4);
    const Vector x = testutil::normal_vector(tri_len(n, d), seed);
    const Matrix L = normal_matrix(n - 1, d, seed + 99);
    const double lhs = (ltriag(x, n, d).cwiseProduct(L)).sum();
    const double rhs = x.dot(ltriag_adjoint(L));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + x.norm() * L.norm()));

    Matrix upper = L;
    for (Index j = 0; j < d; ++j)
      for (Index i = j; i < n - 1; ++i) upper(i, j) = 0.0;
    CHECK(ltriag_adjoint(upper).norm() == 0.0);
    const Matrix lower = L - upper;
    CHECK(ltriag(ltriag_adjoint(lower), n, d) == lower);
  }
}

TEST_CASE("center") {
  Matrix P(2, 1);
  P << 0, 2;
  Matrix expect(2, 1);
  expect << -1, 1;
  CHECK(center(P) == expect);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix Q = normal_matrix(6, 3, seed, 3.0).rowwise() + Eigen::RowVector3d(5, -2, 7);
    const Matrix C = center(Q);
    CHECK(C.colwise().sum().norm() <= 1e-12 * (1.0 + Q.norm()));
    CHECK(rel(edm_of(C), edm_of(Q)) <= 1e-12);
    CHECK(rel(center(C), C) <= 1e-15);
  }
}

TEST_CASE("reduce_to_triangular") {
  SUBCASE("fixed point for lower-trapezoidal L with positive pivots") {
    Matrix L(4, 2);
    L << 2, 0, 1, 3, -1, 0.5, 4, -2;
    const TriangularReduction red = reduce_to_triangular(L);
    CHECK(rel(red.ell, ltriag_adjoint(L)) < 1e-14);
    CHECK(rel(red.Q, Matrix::Identity(2, 2)) < 1e-14);
    CHECK_FALSE(red.rank_deficient);
  }
  SUBCASE("d = 1 flips the sign to make the first entry nonnegative") {
    const Matrix L = (Matrix(3, 1) << -2, 1, 5).finished();
    const TriangularReduction red = reduce_to_triangular(L);
    CHECK(rel(red.ell, -L) < 1e-15);
    CHECK(red.Q(0, 0) == doctest::Approx(-1.0));
  }
  SUBCASE("random round trips") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const Index n = 2 + static_cast<Index>(seed % 10);
      const Index d = 1 + static_cast<Index>(seed % 4);
      const Matrix L = normal_matrix(n - 1, d, seed);
      const TriangularReduction red = reduce_to_triangular(L);
      CHECK(red.ell.size() == tri_len(n, d));
      CHECK((ltriag(red.ell, n, d) * red.Q.transpose() - L).norm() <= 1e-10 * (1.0 + L.norm()));
      CHECK((red.Q.transpose() * red.Q - Matrix::Identity(d, d)).norm() <= 1e-12);
      const Matrix T = ltriag(red.ell, n, d);
      for (Index j = 0; j < std::min(d, n - 1); ++j) CHECK(T(j, j) >= 0.0);
      CHECK(red.rank_deficient == (d > n - 1));
    }
  }
  SUBCASE("rank deficiency is flagged") {
    Matrix L = Matrix::Zero(5, 2);
    L.col(0) = testutil::normal_vector(5, 3);
    CHECK(reduce_to_triangular(L).rank_deficient);
  }
}

TEST_CASE("instance validation") {
  const Instance good = generate_instance(5, 2, 1);
  CHECK_NOTHROW(validate_instance(good, true));
  CHECK(good.P_bar.has_value());
  CHECK(rel(edm_of(*good.P_bar), good.D) < 1e-15);
  CHECK(good.P_bar->colwise().sum().norm() < 1e-12);

  Instance asym = good;
  asym.D(0, 1) += 1e-3;
  CHECK_THROWS_AS(validate_instance(asym), ValidationError);

  Instance diag = good;
  diag.D(2, 2) = 0.5;
  CHECK_THROWS_AS(validate_instance(diag), ValidationError);

  Instance neg = good;
  neg.D(0, 1) = neg.D(1, 0) = -1.0;
  CHECK_THROWS_AS(validate_instance(neg), ValidationError);

  Instance shifted = good;
  shifted.D(0, 1) = shifted.D(1, 0) = good.D(0, 1) + 1.0;
  try {
    validate_instance(shifted);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("invariant") != std::string::npos);
  }

  Instance flat = generate_instance(6, 3, 4);
  flat.d = 1;
  flat.P_bar.reset();
  CHECK_NOTHROW(validate_instance(flat));
  CHECK_THROWS_AS(validate_instance(flat, true), ValidationError);
}

TEST_CASE("generate_instance is deterministic per seed") {
  const Instance a = generate_instance(8, 2, 42);
  const Instance b = generate_instance(8, 2, 42);
  const Instance c = generate_instance(8, 2, 43);
  CHECK(a.D == b.D);
  CHECK(a.D != c.D);
  CHECK_THROWS_AS(generate_instance(1, 1, 0), DomainError);
}
