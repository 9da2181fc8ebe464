#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edmstress/stress.hpp"

namespace edmstress {

struct CertifyOptions {
  double safety_factor = 1.1;     // multiplies the Lipschitz formula
  double eigen_slack = 1e-9;      // hessian floor must exceed this
  double row_margin_factor = 10;  // first-d-rows sigma_min >= factor * r1
  int newton_bound_terms = 6;
};

enum class Verdict { Certified, Failed };

struct Certificate {
  Formulation formulation = Formulation::ReducedL;
  Vector candidate;
  double r = 0.0;
  double safety_factor = 1.0;
  double eigen_slack = 0.0;
  double distance_sum = 0.0;   // sum over ordered pairs of ||p_i - p_j||
  double gamma = 0.0;             // Lipschitz constant used by every test
  double gamma_variation = 0.0;   // ball-variation bound, for reference
  double lambda_min = 0.0;
  double lambda_floor = 0.0;
  double f = 0.0;
  double fbar = 0.0;
  double grad_norm = 0.0;
  std::optional<double> floor_radius;
  double beta = 0.0;
  double eta = 0.0;
  double gamma_r = 0.0;
  double alpha = 0.0;
  std::optional<double> r0;
  std::optional<double> r1;
  std::optional<double> r1_unclamped;
  std::optional<double> rows_sigma_min;   // d >= 2 only
  std::optional<double> rows_margin;
  double row_margin_factor = 0.0;
  // ||x_k - x*|| bounds: as printed, (2 alpha)^(2k) eta / alpha, and the
  // classical (2 alpha)^(2^k) eta / alpha.
  std::vector<double> newton_bound_printed;
  std::vector<double> newton_bound_classical;
  Verdict verdict = Verdict::Failed;
  std::string reason;

  bool certified() const { return verdict == Verdict::Certified; }
};

// 48 sqrt(2) r (sum + 2 n sqrt(n) r), no safety factor. This bounds
// ||H(x) - H(y)|| for x, y in the r-ball (the variation across the whole
// ball), not ||H(x) - H(y)|| / ||x - y||.
double lipschitz_gamma_formula(double distance_sum, Index n, double r);

// Lipschitz constant of the Hessian on the r-ball: the same estimate with the
// displacement kept instead of the ball diameter, 24 sqrt(2) (sum + 2 n
// sqrt(n) r) = lipschitz_gamma_formula / (2r). No safety factor.
double hessian_lipschitz_bound(double distance_sum, Index n, double r);

// Sum over ordered pairs (i, j) of ||p_i - p_j||.
double pairwise_distance_sum(const Matrix& P);

// Hessian Lipschitz constant of f_L / f_ell on the r-ball around x
// (hessian_lipschitz_bound), with the safety factor applied.
double lipschitz_gamma(const Vector& x, const EvalContext& ctx, double r,
                       double safety_factor = 1.1);

double hessian_floor(double lambda_min, double gamma, double r);

// min{r, (f - fbar) / ||g||}; f stays above fbar on that ball when the
// Hessian is positive definite on the r-ball.
double objective_floor_radius(double f, double fbar, double grad_norm,
                              double r);

struct KantorovichParams {
  double beta = 0.0;
  double eta = 0.0;
  double gamma_r = 0.0;
  double alpha = 0.0;
  std::optional<double> r0;
  std::optional<double> r1_unclamped;
};

KantorovichParams kantorovich_from_scalars(double beta, double eta,
                                           double gamma);

// beta = ||H^{-1}||_2 = 1 / lambda_min(H), eta = ||H^{-1} g||.
KantorovichParams kantorovich_params(const Matrix& H, const Vector& g,
                                     double gamma);

// Scalar inputs of the verdict. Everything the inequalities need, nothing
// that requires the objective.
struct CertificateInputs {
  Index d = 1;
  double r = 0.0;
  double gamma = 0.0;
  double gamma_variation = 0.0;
  double lambda_min = 0.0;
  double f = 0.0;
  double fbar = 0.0;
  double grad_norm = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  bool numerically_global = false;
  std::optional<double> rows_sigma_min;
};

// Applies every certification inequality to precomputed scalars.
Certificate assemble_certificate(const CertificateInputs& in,
                                 const CertifyOptions& opts = {});

// Existence proof of a strict local nonglobal minimizer near x. x must be in
// ReducedL with d = 1 or in TriangularEll.
Certificate certify_lngm(const Vector& x, const EvalContext& ctx, double r,
                         std::optional<double> fbar = std::nullopt,
                         const CertifyOptions& opts = {});

struct VerifyResult {
  bool verdict_matches = false;
  double max_rel_diff = 0.0;
  Certificate recomputed;
};

// Recompute a stored certificate from its candidate and the instance.
VerifyResult verify_certificate(const Certificate& stored,
                                const EvalContext& ctx);

} // namespace edmstress
