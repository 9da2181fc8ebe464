#include "edmstress/certifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "edmstress/solver.hpp"

namespace edmstress {

double lipschitz_gamma_formula(double distance_sum, Index n, double r) {
  const double nd = static_cast<double>(n);
  return 48.0 * std::sqrt(2.0) * r * (distance_sum + 2.0 * nd * std::sqrt(nd) * r);
}

double hessian_lipschitz_bound(double distance_sum, Index n, double r) {
  const double nd = static_cast<double>(n);
  return 24.0 * std::sqrt(2.0) * (distance_sum + 2.0 * nd * std::sqrt(nd) * r);
}

double pairwise_distance_sum(const Matrix& P) {
  const Index n = P.rows();
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) sum += (P.row(i) - P.row(j)).norm();
  }
  return 2.0 * sum;
}

double lipschitz_gamma(const Vector& x, const EvalContext& ctx, double r,
                       double safety_factor) {
  if (!(r > 0.0)) throw DomainError("lipschitz_gamma: radius must be positive");
  const Matrix P = ctx.configuration(x);
  return safety_factor * hessian_lipschitz_bound(pairwise_distance_sum(P), ctx.n(), r);
}

double hessian_floor(double lambda_min, double gamma, double r) {
  return lambda_min - gamma * r;
}

double objective_floor_radius(double f, double fbar, double grad_norm,
                              double r) {
  if (!(fbar > 0.0) || !(f > fbar)) {
    std::ostringstream msg;
    msg << "objective_floor_radius: need f > fbar > 0 (f = " << f
        << ", fbar = " << fbar << ")";
    throw DomainError(msg.str());
  }
  if (grad_norm < 0.0) throw DomainError("objective_floor_radius: negative gradient norm");
  if (grad_norm == 0.0) return r;
  return std::min(r, (f - fbar) / grad_norm);
}

KantorovichParams kantorovich_from_scalars(double beta, double eta,
                                           double gamma) {
  KantorovichParams k;
  k.beta = beta;
  k.eta = eta;
  k.gamma_r = beta * gamma;
  k.alpha = k.gamma_r * eta;
  if (k.alpha <= 0.5) {
    const double disc = std::sqrt(1.0 - 2.0 * k.alpha);
    k.r1_unclamped = (1.0 + disc) / k.gamma_r;
    // 1 - sqrt(1 - 2a) rewritten to avoid cancellation for small alpha.
    k.r0 = 2.0 * k.alpha / (1.0 + disc) / k.gamma_r;
  }
  return k;
}

KantorovichParams kantorovich_params(const Matrix& H, const Vector& g,
                                     double gamma) {
  if (H.rows() != H.cols() || H.rows() != g.size()) {
    throw DimensionError("kantorovich_params: H must be square and match g");
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
  const Vector& lam = eig.eigenvalues();
  if (!(lam(0) > 0.0)) {
    std::ostringstream msg;
    msg << "kantorovich_params: Hessian is not positive definite (lambda_min = "
        << lam(0) << ")";
    throw DomainError(msg.str());
  }
  const Matrix& Q = eig.eigenvectors();
  const Vector newton = Q * (Q.transpose() * g).cwiseQuotient(lam);
  return kantorovich_from_scalars(1.0 / lam(0), newton.norm(), gamma);
}

Certificate assemble_certificate(const CertificateInputs& in,
                                 const CertifyOptions& opts) {
  Certificate c;
  c.r = in.r;
  c.safety_factor = opts.safety_factor;
  c.eigen_slack = opts.eigen_slack;
  c.row_margin_factor = opts.row_margin_factor;
  c.gamma = in.gamma;
  c.gamma_variation = in.gamma_variation;
  c.lambda_min = in.lambda_min;
  c.lambda_floor = hessian_floor(in.lambda_min, in.gamma, in.r);
  c.f = in.f;
  c.fbar = in.fbar;
  c.grad_norm = in.grad_norm;
  c.rows_sigma_min = in.rows_sigma_min;

  std::vector<std::string> failures;
  if (in.numerically_global) {
    failures.emplace_back("candidate is numerically a global minimizer");
  }
  if (!(in.fbar > 0.0)) {
    failures.emplace_back("objective floor fbar is not positive");
  } else if (!(in.f > in.fbar)) {
    failures.emplace_back("f does not exceed the objective floor fbar");
  } else {
    c.floor_radius = objective_floor_radius(in.f, in.fbar, in.grad_norm, in.r);
    if (*c.floor_radius < in.r) {
      failures.emplace_back("objective floor holds only on a ball smaller than r");
    }
  }

  if (!(in.lambda_min > 0.0)) {
    failures.emplace_back("Hessian at the candidate is not positive definite");
  } else {
    if (!(c.lambda_floor > opts.eigen_slack)) {
      failures.emplace_back("Hessian floor lambda_min - gamma r is not positive");
    }
    const KantorovichParams k = kantorovich_from_scalars(in.beta, in.eta, in.gamma);
    c.beta = k.beta;
    c.eta = k.eta;
    c.gamma_r = k.gamma_r;
    c.alpha = k.alpha;
    c.r0 = k.r0;
    c.r1_unclamped = k.r1_unclamped;
    if (!k.r0) {
      failures.emplace_back("Kantorovich alpha exceeds 1/2");
    } else {
      c.r1 = std::min(in.r, *k.r1_unclamped);
      if (*k.r0 > in.r) failures.emplace_back("Kantorovich radius r0 exceeds r");
      for (int j = 0; j < opts.newton_bound_terms; ++j) {
        if (k.alpha > 0.0) {
          const double base = 2.0 * k.alpha;
          c.newton_bound_printed.push_back(std::pow(base, 2.0 * j) * k.eta / k.alpha);
          c.newton_bound_classical.push_back(std::pow(base, std::exp2(j)) * k.eta /
                                             k.alpha);
        } else {
          c.newton_bound_printed.push_back(0.0);
          c.newton_bound_classical.push_back(0.0);
        }
      }
    }
  }

  if (in.d >= 2) {
    if (c.r1) c.rows_margin = opts.row_margin_factor * *c.r1;
    if (!in.rows_sigma_min || !c.rows_margin ||
        !(*in.rows_sigma_min >= *c.rows_margin)) {
      failures.emplace_back("first d rows of the triangular factor are not "
                            "safely linearly independent");
    }
  }

  if (failures.empty()) {
    c.verdict = Verdict::Certified;
  } else {
    c.verdict = Verdict::Failed;
    std::ostringstream msg;
    for (std::size_t i = 0; i < failures.size(); ++i) {
      if (i) msg << "; ";
      msg << failures[i];
    }
    c.reason = msg.str();
  }
  return c;
}

Certificate certify_lngm(const Vector& x, const EvalContext& ctx, double r,
                         std::optional<double> fbar,
                         const CertifyOptions& opts) {
  const Index d = ctx.d();
  switch (ctx.formulation()) {
  case Formulation::FullP:
    throw DomainError("certify_lngm: candidates must be given in L (d = 1) or "
                      "ell coordinates; f(P) has translation-invariant, "
                      "singular Hessians");
  case Formulation::ReducedL:
    if (d >= 2) {
      throw DomainError("certify_lngm: for d >= 2 every local minimizer of f_L "
                        "is nonisolated (rotation orbit) and its Hessian is "
                        "singular; certify in ell coordinates instead");
    }
    break;
  case Formulation::TriangularEll:
    break;
  }
  if (!(r > 0.0)) throw DomainError("certify_lngm: radius must be positive");
  ctx.check_point(x);

  const double f = value(x, ctx);
  const Vector g = gradient_extended(x, ctx);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian_matrix(x, ctx));
  const Vector& lam = eig.eigenvalues();

  CertificateInputs in;
  in.d = d;
  in.r = r;
  const Matrix P = ctx.configuration(x);
  const double distance_sum = pairwise_distance_sum(P);
  in.gamma = opts.safety_factor * hessian_lipschitz_bound(distance_sum, ctx.n(), r);
  in.gamma_variation = opts.safety_factor * lipschitz_gamma_formula(distance_sum, ctx.n(), r);
  in.lambda_min = lam(0);
  in.f = f;
  in.fbar = fbar.value_or(0.5 * f);
  in.grad_norm = g.norm();
  in.numerically_global = is_numerically_global(f, ctx.instance());
  if (lam(0) > 0.0) {
    const Matrix& Q = eig.eigenvectors();
    in.beta = 1.0 / lam(0);
    in.eta = (Q * (Q.transpose() * g).cwiseQuotient(lam)).norm();
  }
  if (d >= 2) {
    const Matrix L = ltriag(ctx.formulation() == Formulation::TriangularEll
                                ? x
                                : ltriag_adjoint(ctx.v().transpose() * P),
                            ctx.n(), d);
    const Index rows = std::min<Index>(d, L.rows());
    if (rows < d) {
      in.rows_sigma_min = 0.0;
    } else {
      Eigen::JacobiSVD<Matrix> svd(L.topRows(d));
      in.rows_sigma_min = svd.singularValues()(d - 1);
    }
  }

  Certificate c = assemble_certificate(in, opts);
  c.formulation = ctx.formulation();
  c.candidate = x;
  c.distance_sum = distance_sum;
  return c;
}

VerifyResult verify_certificate(const Certificate& stored,
                                const EvalContext& ctx) {
  CertifyOptions opts;
  opts.safety_factor = stored.safety_factor;
  opts.eigen_slack = stored.eigen_slack;
  opts.row_margin_factor = stored.row_margin_factor;
  opts.newton_bound_terms = static_cast<int>(stored.newton_bound_printed.size());
  if (opts.newton_bound_terms == 0) opts.newton_bound_terms = CertifyOptions{}.newton_bound_terms;

  VerifyResult out;
  out.recomputed = certify_lngm(stored.candidate,
                                ctx.with_formulation(stored.formulation),
                                stored.r, stored.fbar, opts);
  out.verdict_matches = out.recomputed.verdict == stored.verdict;
  const Certificate& a = stored;
  const Certificate& b = out.recomputed;
  double worst = 0.0;
  for (auto [u, v] : {std::pair{a.gamma, b.gamma}, {a.lambda_min, b.lambda_min},
                      {a.f, b.f}, {a.grad_norm, b.grad_norm}, {a.beta, b.beta},
                      {a.eta, b.eta}, {a.alpha, b.alpha}}) {
    const double scale = std::max({std::abs(u), std::abs(v), 1e-300});
    worst = std::max(worst, std::abs(u - v) / scale);
  }
  out.max_rel_diff = worst;
  return out;
}

} // namespace edmstress
