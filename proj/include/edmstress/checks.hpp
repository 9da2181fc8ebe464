#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "edmstress/certifier.hpp"
#include "edmstress/solver.hpp"

namespace edmstress {

// Central differences with step 1e-5 (1 + |x_i|).
Vector fd_gradient(const Vector& x, const EvalContext& ctx);
// Central differences of the analytic gradient, symmetrized.
Matrix fd_hessian(const Vector& x, const EvalContext& ctx);

Matrix random_orthogonal(Index d, std::uint64_t seed);

// Offset from x to the nearby Newton limit, resolved below the rounding of x:
// chord iterations delta <- delta - H(x)^{-1} g(x + delta) with the gradient
// taken in extended precision.
Vector newton_offset(const Vector& x, const EvalContext& ctx, int steps = 6);

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;       // worst observed error (or the key statistic)
  double tolerance = 0.0;
  std::string detail;
};

struct LngmSearchResult {
  bool found = false;
  std::uint64_t instance_seed = 0;
  Instance instance;
  SolveReport report;
  Certificate certificate;
};

// Scan generated (n, d) instances over the given seeds; returns the first
// candidate that certifies at radius r with fbar = f / 2.
LngmSearchResult search_certified_lngm(Index n, Index d,
                                       const std::vector<std::uint64_t>& seeds,
                                       int starts, double r,
                                       const SolveOptions& opts = {});

const std::vector<std::string>& check_suite_names();

// Runs a named property suite on fixed-seed desk-scale instances. Throws
// DomainError for an unknown name.
std::vector<CheckResult> run_check_suite(std::string_view suite, int threads = 1);

} // namespace edmstress
