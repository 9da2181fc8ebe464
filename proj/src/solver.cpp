#include "edmstress/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace edmstress {

namespace {

using EigenSolver = Eigen::SelfAdjointEigenSolver<Matrix>;

struct StepResult {
  Vector step;
  double predicted = 0.0;   // m(0) - m(s) >= 0
  bool on_boundary = false;
};

// Exact minimizer of g^T s + 1/2 s^T H s over ||s|| <= radius, given the
// eigendecomposition of H (Moré-Sorensen with an eigenbasis).
StepResult solve_subproblem(const EigenSolver& eig, const Vector& g,
                            double radius) {
  const Vector& lam = eig.eigenvalues();
  const Matrix& Q = eig.eigenvectors();
  const Vector c = Q.transpose() * g;
  const Index m = lam.size();
  const double hnorm = std::max(std::abs(lam(0)), std::abs(lam(m - 1)));
  const double tiny = 1e-14 * (1.0 + hnorm);

  auto finish = [&](const Vector& z, bool boundary) {
    StepResult out;
    out.step = Q * z;
    out.predicted = -(c.dot(z) + 0.5 * (lam.array() * z.array().square()).sum());
    out.on_boundary = boundary;
    return out;
  };
  auto step_at = [&](double mu) {
    Vector z(m);
    for (Index i = 0; i < m; ++i) z(i) = -c(i) / (lam(i) + mu);
    return z;
  };

  if (lam(0) > tiny) {
    const Vector z = step_at(0.0);
    if (z.norm() <= radius) return finish(z, false);
  }

  const double lower = std::max(0.0, -lam(0));
  const double cnorm = c.norm();

  // Hard case: no gradient weight on the (near-)minimal eigenspace.
  bool degenerate_free = true;
  Vector z_rest = Vector::Zero(m);
  for (Index i = 0; i < m; ++i) {
    if (lam(i) + lower <= tiny) {
      if (std::abs(c(i)) > 1e-12 * cnorm + std::numeric_limits<double>::min()) {
        degenerate_free = false;
      }
    } else {
      z_rest(i) = -c(i) / (lam(i) + lower);
    }
  }
  if (degenerate_free && z_rest.norm() <= radius) {
    if (-lam(0) > tiny) {
      const double tau =
          std::sqrt(std::max(0.0, radius * radius - z_rest.squaredNorm()));
      z_rest(0) += tau;
      return finish(z_rest, true);
    }
    return finish(z_rest, false);
  }

  // Secular equation ||s(mu)|| = radius on (lower, hi].
  double lo = lower;
  double hi = lower + cnorm / radius + tiny;
  double mu = hi;
  Vector z = step_at(mu);
  for (int it = 0; it < 200; ++it) {
    const double norm = z.norm();
    if (std::abs(norm - radius) <= 1e-12 * radius) break;
    if (norm > radius) {
      lo = mu;
    } else {
      hi = mu;
    }
    double q = 0.0;
    for (Index i = 0; i < m; ++i) {
      const double den = lam(i) + mu;
      q += c(i) * c(i) / (den * den * den);
    }
    double next = mu + (norm - radius) / radius * norm * norm / q;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == mu) break;
    mu = next;
    z = step_at(mu);
  }
  return finish(z, true);
}

double spectral_norm(const EigenSolver& eig) {
  const Vector& lam = eig.eigenvalues();
  return std::max(std::abs(lam(0)), std::abs(lam(lam.size() - 1)));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Vector canonical_key(const SolveReport& r, const EvalContext& ctx) {
  const EvalContext ell = ctx.with_formulation(Formulation::TriangularEll);
  return ell.from_configuration(
      ctx.with_formulation(r.formulation).configuration(r.x));
}

} // namespace

std::string_view classification_name(Classification c) {
  switch (c) {
  case Classification::Global:
    return "GLOBAL";
  case Classification::LngmCandidate:
    return "LNGM_CANDIDATE";
  case Classification::Saddle:
    return "SADDLE";
  case Classification::Maximizer:
    return "MAXIMIZER";
  case Classification::Undetermined:
    return "UNDETERMINED";
  }
  return "UNDETERMINED";
}

Classification parse_classification(std::string_view name) {
  for (auto c : {Classification::Global, Classification::LngmCandidate,
                 Classification::Saddle, Classification::Maximizer,
                 Classification::Undetermined}) {
    if (classification_name(c) == name) return c;
  }
  throw DomainError("unknown classification '" + std::string(name) + "'");
}

void SolveOptions::validate() const {
  if (max_iters < 0) throw DomainError("max_iters must be >= 0");
  if (!(g_tol_rel > 0.0) || !(lambda_tol_rel > 0.0)) {
    throw DomainError("tolerances must be positive");
  }
  if (!(initial_radius > 0.0) || !(max_radius >= initial_radius)) {
    throw DomainError("need 0 < initial_radius <= max_radius");
  }
  for (double t : {accept_ratio, shrink_ratio, expand_ratio}) {
    if (!(t > 0.0 && t < 1.0)) {
      throw DomainError("trust-region ratio thresholds must lie in (0, 1)");
    }
  }
  if (threads < 1) throw DomainError("threads must be >= 1");
}

bool is_numerically_global(double f, const Instance& instance) {
  return f <= kGlobalTol * (1.0 + instance.D.squaredNorm());
}

SolveReport trust_region_minimize(const Vector& x0, const EvalContext& ctx,
                                  const SolveOptions& opts) {
  opts.validate();
  ctx.check_point(x0);

  SolveReport report;
  report.formulation = ctx.formulation();

  Vector x = x0;
  auto [f, g] = value_and_gradient(x, ctx);
  if (!std::isfinite(f)) {
    throw SolveError("non-finite objective at the starting point", {});
  }
  double radius = opts.initial_radius;
  std::vector<TraceEntry> trace;

  EigenSolver eig;
  bool fresh = false;
  double lambda_min = 0.0;
  double hnorm = 0.0;
  int iter = 0;
  for (;; ++iter) {
    if (!fresh) {
      eig.compute(hessian_matrix(x, ctx));
      lambda_min = eig.eigenvalues()(0);
      hnorm = spectral_norm(eig);
      fresh = true;
    }
    const double gnorm = g.norm();
    const double g_tol = opts.g_tol_rel * (1.0 + std::abs(f));
    const double lambda_tol = opts.lambda_tol_rel * (1.0 + hnorm);
    trace.push_back({f, gnorm, radius});
    report.g_tol = g_tol;
    report.lambda_tol = lambda_tol;

    if (gnorm <= g_tol && lambda_min >= -lambda_tol) {
      report.converged = true;
      break;
    }
    if (iter >= opts.max_iters) break;
    if (radius < 1e-15 * (1.0 + x.norm())) break;   // stalled

    const StepResult sub = solve_subproblem(eig, g, radius);
    const Vector x_new = x + sub.step;
    auto [f_new, g_new] = value_and_gradient(x_new, ctx);
    if (!std::isfinite(f_new)) {
      std::ostringstream msg;
      msg << "non-finite objective at iteration " << iter;
      throw SolveError(msg.str(), std::move(trace));
    }

    const double actual = f - f_new;
    double rho;
    if (sub.predicted > 0.0) {
      rho = actual / sub.predicted;
    } else {
      rho = actual > 0.0 ? 1.0 : -1.0;
    }

    if (rho < opts.shrink_ratio) {
      radius = 0.25 * std::min(radius, sub.step.norm());
    } else if (rho > opts.expand_ratio && sub.on_boundary) {
      radius = std::min(2.0 * radius, opts.max_radius);
    }
    if (rho >= opts.accept_ratio && f_new < f) {
      x = x_new;
      f = f_new;
      g = std::move(g_new);
      fresh = false;
    }
  }

  report.x = x;
  report.f = f;
  report.grad_norm = g.norm();
  report.lambda_min = lambda_min;
  report.hessian_norm = hnorm;
  report.iterations = iter;
  if (opts.trace) report.trace = std::move(trace);

  if (report.converged) {
    StationaryScalars s;
    s.f = f;
    s.grad_norm = report.grad_norm;
    s.lambda_min = lambda_min;
    s.g_tol = report.g_tol;
    s.lambda_tol = report.lambda_tol;
    s.edm_norm = edm_of(ctx.configuration(x)).norm();
    report.classification = classify_stationary(s, ctx);
  }
  return report;
}

std::vector<Vector> newton_iterate(const Vector& x0, const EvalContext& ctx,
                                   int steps) {
  if (steps < 0) throw DomainError("newton_iterate: steps must be >= 0");
  ctx.check_point(x0);
  std::vector<Vector> seq;
  seq.reserve(static_cast<std::size_t>(steps) + 1);
  seq.push_back(x0);
  Vector x = x0;
  for (int j = 0; j < steps; ++j) {
    const Vector g = gradient(x, ctx);
    if (g.squaredNorm() == 0.0) {
      seq.push_back(x);
      continue;
    }
    const EigenSolver eig(hessian_matrix(x, ctx));
    const Vector& lam = eig.eigenvalues();
    const double abs_min = lam.cwiseAbs().minCoeff();
    const double abs_max = lam.cwiseAbs().maxCoeff();
    if (!(abs_min > 0.0) || abs_max / abs_min > 1e14) {
      std::ostringstream msg;
      msg << "newton_iterate: Hessian singular at iterate " << j
          << " (condition estimate " << (abs_min > 0.0 ? abs_max / abs_min : INFINITY)
          << ")";
      throw SingularityError(msg.str());
    }
    const Matrix& Q = eig.eigenvectors();
    const Vector c = Q.transpose() * g;
    x -= Q * c.cwiseQuotient(lam);
    if (!x.allFinite()) {
      throw NumericalError("newton_iterate: non-finite iterate " +
                           std::to_string(j + 1));
    }
    seq.push_back(x);
  }
  return seq;
}

StationaryScalars stationary_scalars(const Vector& x, const EvalContext& ctx,
                                     const SolveOptions& opts) {
  const auto [f, g] = value_and_gradient(x, ctx);
  const EigenSolver eig(hessian_matrix(x, ctx), Eigen::EigenvaluesOnly);
  StationaryScalars s;
  s.f = f;
  s.grad_norm = g.norm();
  s.lambda_min = eig.eigenvalues()(0);
  s.g_tol = opts.g_tol_rel * (1.0 + std::abs(f));
  s.lambda_tol = opts.lambda_tol_rel * (1.0 + spectral_norm(eig));
  s.edm_norm = edm_of(ctx.configuration(x)).norm();
  return s;
}

Classification classify_stationary(const StationaryScalars& s,
                                   const EvalContext& ctx) {
  if (s.grad_norm > s.g_tol) {
    std::ostringstream msg;
    msg << "classify_stationary: gradient norm " << s.grad_norm
        << " exceeds tolerance " << s.g_tol;
    throw PreconditionError(msg.str());
  }
  const Instance& inst = ctx.instance();
  const double dnorm = inst.D.norm();
  if (is_numerically_global(s.f, inst)) return Classification::Global;
  if (dnorm > 0.0 && s.edm_norm <= kGlobalTol * (1.0 + dnorm)) {
    return Classification::Maximizer;
  }
  if (s.lambda_min < -s.lambda_tol) return Classification::Saddle;
  const bool isolating = ctx.formulation() == classification_formulation(ctx.d()) ||
                         ctx.formulation() == Formulation::TriangularEll;
  if (isolating && s.lambda_min > s.lambda_tol) {
    return Classification::LngmCandidate;
  }
  return Classification::Undetermined;
}

Witness negative_curvature_witness(const Matrix& L, const EvalContext& ctx,
                                   const SolveOptions& opts) {
  const Index n = ctx.n();
  const Index d = ctx.d();
  if (L.rows() != n - 1 || L.cols() != d) {
    throw DimensionError("negative_curvature_witness: L must be (n-1) x d");
  }
  const EvalContext ctx_l = ctx.with_formulation(Formulation::ReducedL);
  const Vector xl = Eigen::Map<const Vector>(L.data(), L.size());
  const auto [f, g] = value_and_gradient(xl, ctx_l);
  const double g_tol = opts.g_tol_rel * (1.0 + std::abs(f));
  if (g.norm() > g_tol) {
    std::ostringstream msg;
    msg << "negative_curvature_witness: L is not stationary (||g|| = "
        << g.norm() << " > " << g_tol << ")";
    throw PreconditionError(msg.str());
  }
  if (is_numerically_global(f, ctx.instance())) {
    throw PreconditionError(
        "negative_curvature_witness: L is a global minimizer");
  }

  Eigen::JacobiSVD<Matrix> svd(L, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const bool deficient =
      sv.size() < d || sv(0) == 0.0 || sv(sv.size() - 1) <= 1e-8 * sv(0);
  if (!deficient) {
    std::ostringstream msg;
    msg << "negative_curvature_witness: rank(L) = d (smallest singular value "
        << sv(sv.size() - 1) << ")";
    throw PreconditionError(msg.str());
  }

  Witness out;
  out.w = svd.matrixV().col(d - 1);
  const Matrix P = ctx.v() * L;
  const Matrix F = residual(P, ctx.instance().D);
  const Matrix KsF = detail::lindenstrauss_adjoint_unchecked(F);
  const EigenSolver eig(KsF);
  if (!(eig.eigenvalues()(0) < 0.0)) {
    throw PreconditionError(
        "negative_curvature_witness: K*(F) is positive semidefinite");
  }
  out.a = eig.eigenvectors().col(0);
  out.direction = out.a * out.w.transpose();
  out.direction_l = ctx.v().transpose() * out.direction;

  const EvalContext ctx_p = ctx.with_formulation(Formulation::FullP);
  const Vector xp = Eigen::Map<const Vector>(P.data(), P.size());
  const Vector dp =
      Eigen::Map<const Vector>(out.direction.data(), out.direction.size());
  out.curvature = hessian_apply(xp, dp, ctx_p).dot(dp);
  out.h2_curvature = (out.direction.transpose() * KsF * out.direction).trace();
  out.closed_form = out.w.squaredNorm() * out.a.dot(KsF * out.a);
  const Matrix X = P * out.direction.transpose() + out.direction * P.transpose();
  out.h1_residual = 0.5 * detail::lindenstrauss_unchecked(X).norm();
  return out;
}

std::uint64_t start_seed(std::uint64_t master, int index) {
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(index)));
}

Vector random_start(const EvalContext& ctx, std::uint64_t seed) {
  const Matrix& D = ctx.instance().D;
  const double n = static_cast<double>(ctx.n());
  const double mean_sq = D.sum() / (n * (n - 1.0));
  double scale = std::sqrt(mean_sq / (2.0 * static_cast<double>(ctx.d())));
  if (!(scale > 0.0)) scale = 1.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x(ctx.dim());
  for (Index i = 0; i < x.size(); ++i) x(i) = scale * normal(rng);
  return x;
}

std::vector<SolveReport> multi_start_scan(const Instance& instance,
                                          Formulation formulation,
                                          int k_starts,
                                          const SolveOptions& opts) {
  if (k_starts < 1) throw DomainError("multi_start_scan: need k_starts >= 1");
  opts.validate();
  const EvalContext ctx(instance, formulation);
  const Formulation target = classification_formulation(ctx.d());
  const bool handoff = formulation != target &&
                       formulation != Formulation::TriangularEll;
  const EvalContext ctx_target = ctx.with_formulation(target);

  std::vector<SolveReport> runs(static_cast<std::size_t>(k_starts));
  auto run_one = [&](int s) {
    SolveReport rep;
    try {
      const Vector x0 = random_start(ctx, start_seed(opts.seed, s));
      rep = trust_region_minimize(x0, ctx, opts);
      if (handoff) {
        const Vector xt = ctx_target.from_configuration(ctx.configuration(rep.x));
        SolveReport second = trust_region_minimize(xt, ctx_target, opts);
        second.iterations += rep.iterations;
        if (opts.trace) {
          rep.trace.insert(rep.trace.end(), second.trace.begin(),
                           second.trace.end());
          second.trace = std::move(rep.trace);
        }
        rep = std::move(second);
      }
    } catch (const std::exception& e) {
      rep = SolveReport{};
      rep.formulation = handoff ? target : formulation;
      rep.error = e.what();
      rep.converged = false;
      rep.classification = Classification::Undetermined;
      if (const auto* se = dynamic_cast<const SolveError*>(&e)) {
        rep.trace = se->trace();
      }
    }
    rep.start_index = s;
    runs[static_cast<std::size_t>(s)] = std::move(rep);
  };

  const int threads = std::min(opts.threads, k_starts);
  if (threads <= 1) {
    for (int s = 0; s < k_starts; ++s) run_one(s);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int s = next++; s < k_starts; s = next++) run_one(s);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<SolveReport> out;
  std::vector<Vector> keys;
  std::vector<std::size_t> owners;
  for (auto& rep : runs) {
    if (!rep.converged) {
      out.push_back(std::move(rep));
      continue;
    }
    const Vector key = canonical_key(rep, ctx);
    bool merged = false;
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if ((keys[k] - key).norm() <= 1e-6) {
        ++out[owners[k]].hits;
        merged = true;
        break;
      }
    }
    if (!merged) {
      keys.push_back(key);
      owners.push_back(out.size());
      out.push_back(std::move(rep));
    }
  }
  return out;
}

} // namespace edmstress
