#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace testutil {

inline Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                     double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = normal(rng);
  return M;
}

inline Eigen::VectorXd normal_vector(Eigen::Index size, std::uint64_t seed, double scale = 1.0) {
  return normal_matrix(size, 1, seed, scale);
}

inline Eigen::MatrixXd symmetric(Eigen::Index n, std::uint64_t seed) {
  const Eigen::MatrixXd A = normal_matrix(n, n, seed);
  return 0.5 * (A + A.transpose());
}

inline double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / (1.0 + b.norm());
}

}  // namespace testutil
