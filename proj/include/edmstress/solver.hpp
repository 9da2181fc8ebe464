#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edmstress/stress.hpp"

namespace edmstress {

enum class Classification { Global, LngmCandidate, Saddle, Maximizer, Undetermined };

std::string_view classification_name(Classification c);
Classification parse_classification(std::string_view name);

struct SolveOptions {
  int max_iters = 500;
  // Stop when ||g|| <= g_tol_rel (1 + |f|) and
  // lambda_min >= -lambda_tol_rel (1 + ||H||).
  double g_tol_rel = 1e-8;
  double lambda_tol_rel = 1e-8;
  double initial_radius = 1.0;
  double max_radius = 1e4;
  double accept_ratio = 0.1;    // rho below this: reject
  double shrink_ratio = 0.25;   // rho below this: shrink
  double expand_ratio = 0.75;   // rho above this on the boundary: expand
  std::uint64_t seed = 0;
  bool trace = true;
  int threads = 1;              // multi_start_scan only

  void validate() const;
};

struct TraceEntry {
  double f;
  double grad_norm;
  double radius;
};

struct SolveReport {
  Formulation formulation = Formulation::ReducedL;
  Vector x;
  double f = 0.0;
  double grad_norm = 0.0;
  double lambda_min = 0.0;
  double hessian_norm = 0.0;
  double g_tol = 0.0;
  double lambda_tol = 0.0;
  int iterations = 0;
  bool converged = false;
  Classification classification = Classification::Undetermined;
  std::vector<TraceEntry> trace;
  // multi_start_scan bookkeeping
  int start_index = 0;
  int hits = 1;
  std::string error;
};

// Raised when the objective turns non-finite mid-solve; carries the trace.
class SolveError : public NumericalError {
public:
  SolveError(const std::string& what, std::vector<TraceEntry> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const std::vector<TraceEntry>& trace() const { return trace_; }

private:
  std::vector<TraceEntry> trace_;
};

// Trust-region Newton with the subproblem solved exactly through the
// eigendecomposition of the dense Hessian. Terminates at second-order points.
SolveReport trust_region_minimize(const Vector& x0, const EvalContext& ctx,
                                  const SolveOptions& opts = {});

// Plain Newton iterates x_{j+1} = x_j - H(x_j)^{-1} g(x_j); returns x_0..x_k.
std::vector<Vector> newton_iterate(const Vector& x0, const EvalContext& ctx,
                                   int steps);

struct StationaryScalars {
  double f = 0.0;
  double grad_norm = 0.0;
  double lambda_min = 0.0;
  double g_tol = 0.0;
  double lambda_tol = 0.0;
  double edm_norm = 0.0;   // ||D(P)||_F of the configuration
};

// Relative globality threshold: f <= kGlobalTol (1 + ||D_bar||^2).
inline constexpr double kGlobalTol = 1e-8;

bool is_numerically_global(double f, const Instance& instance);

StationaryScalars stationary_scalars(const Vector& x, const EvalContext& ctx,
                                     const SolveOptions& opts = {});

Classification classify_stationary(const StationaryScalars& s,
                                   const EvalContext& ctx);

struct Witness {
  Vector a;            // unit n-vector, minimal eigenvector of K*(F(P))
  Vector w;            // unit d-vector with L w = 0
  Matrix direction;    // a w^T in P coordinates
  Matrix direction_l;  // V^T a w^T in L coordinates
  double curvature = 0.0;      // <H(dP), dP>
  double h2_curvature = 0.0;   // dP^T H2 dP
  double closed_form = 0.0;    // ||w||^2 a^T K*(F) a
  double h1_residual = 0.0;    // ||J(dP)||
};

// Negative-curvature direction at a rank-deficient nonglobal stationary L.
Witness negative_curvature_witness(const Matrix& L, const EvalContext& ctx,
                                   const SolveOptions& opts = {});

// Standard-normal starts scaled to the data, one trust-region run per start.
// Points searched in ReducedL (or FullP) are handed over to the
// classification formulation before being classified; reports are
// deduplicated by their canonical triangular coordinates.
std::vector<SolveReport> multi_start_scan(const Instance& instance,
                                          Formulation formulation,
                                          int k_starts,
                                          const SolveOptions& opts = {});

// Seed of the start with the given index, derived from the master seed.
std::uint64_t start_seed(std::uint64_t master, int index);

Vector random_start(const EvalContext& ctx, std::uint64_t seed);

} // namespace edmstress
