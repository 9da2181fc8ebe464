#include "edmstress/checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace edmstress {

namespace {

double rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / (1.0 + b.norm());
}

Vector normal_vector(Index size, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(size);
  for (Index i = 0; i < size; ++i) v(i) = scale * normal(rng);
  return v;
}

class Tracker {
public:
  Tracker(std::string name, double tol) : name_(std::move(name)), tol_(tol) {}
  void observe(double err) {
    if (!(err <= worst_)) worst_ = std::isnan(err) ? INFINITY : std::max(worst_, err);
    ++count_;
  }
  void fail(std::string why) { forced_ = std::move(why); }
  CheckResult result() const {
    CheckResult r;
    r.name = name_;
    r.tolerance = tol_;
    r.worst = worst_;
    r.passed = forced_.empty() && worst_ <= tol_ && count_ > 0;
    std::ostringstream msg;
    msg << count_ << " samples";
    if (!forced_.empty()) msg << "; " << forced_;
    r.detail = msg.str();
    return r;
  }

private:
  std::string name_;
  double tol_;
  double worst_ = 0.0;
  int count_ = 0;
  std::string forced_;
};

CheckResult boolean_result(std::string name, bool ok, double statistic,
                           std::string detail) {
  CheckResult r;
  r.name = std::move(name);
  r.passed = ok;
  r.worst = statistic;
  r.detail = std::move(detail);
  return r;
}

double spectral_norm_sym(const Matrix& M) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<CheckResult> calculus_suite() {
  Tracker grad("gradient vs finite differences", 1e-6);
  Tracker hess("dense Hessian vs finite differences", 1e-6);
  Tracker apply("hessian_apply vs dense columns", 1e-10);
  Tracker quad("quadratic form identity", 1e-10);
  Tracker rows("FULL_P gradient rows sum to zero", 1e-12);
  Tracker split("H = 4 H1 + 2 H2", 1e-14);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Index n = 2 + static_cast<Index>(seed % 11);
    const Index d = 1 + static_cast<Index>((seed / 11) % 3);
    const Instance inst = generate_instance(n, d, seed);
    std::mt19937_64 rng(seed + 7919);
    for (auto form : {Formulation::FullP, Formulation::ReducedL,
                      Formulation::TriangularEll}) {
      const EvalContext ctx(inst, form);
      const Vector x = normal_vector(ctx.dim(), rng);
      const Vector g = gradient(x, ctx);
      grad.observe(rel_err(g, fd_gradient(x, ctx)));
      const HessianParts parts = hessian_dense(x, ctx);
      hess.observe(rel_err(parts.H, fd_hessian(x, ctx)));
      split.observe(rel_err(parts.H, 4.0 * parts.H1 + 2.0 * parts.H2));
      const double hscale = 1.0 + parts.H.norm();
      for (Index k = 0; k < ctx.dim(); ++k) {
        const Vector e = Vector::Unit(ctx.dim(), k);
        apply.observe((hessian_apply(x, e, ctx) - parts.H.col(k)).norm() / hscale);
      }
      if (form == Formulation::FullP) {
        const Matrix G = Eigen::Map<const Matrix>(g.data(), n, d);
        rows.observe(G.colwise().sum().norm() / (1.0 + G.norm()));
        const Matrix P = ctx.configuration(x);
        const Matrix dP = Eigen::Map<const Matrix>(normal_vector(n * d, rng).data(), n, d);
        const Vector dx = Eigen::Map<const Vector>(dP.data(), dP.size());
        const Matrix F = residual(P, inst.D);
        const Matrix X = P * dP.transpose() + dP * P.transpose();
        const double expected = lindenstrauss(X).squaredNorm() +
                                2.0 * (F.cwiseProduct(edm_of(dP))).sum();
        const double got = hessian_apply(x, dx, ctx).dot(dx);
        quad.observe(std::abs(got - expected) / (1.0 + std::abs(expected)));
      }
    }
  }
  return {grad.result(), hess.result(), apply.result(), quad.result(),
          rows.result(), split.result()};
}

std::vector<CheckResult> equivalence_suite() {
  Tracker trans("translation invariance of f", 1e-12);
  Tracker rot("rotation invariance of f", 1e-12);
  Tracker lift("f(VL) = f_L(L) = f_ell(reduce(L))", 1e-10);
  Tracker qr("ltriag(ell) Q^T = L", 1e-10);
  Tracker gnorm("||f'(VL)|| = ||f_L'(L)|| at solver outputs", 1e-10);
  Tracker spectrum("spec f''(VL) = spec f_L''(L) + d zeros", 1e-8);
  Tracker ell_stat("reduced ell point stationary when L is", 1.0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Index n = 3 + static_cast<Index>(seed % 8);
    const Index d = 1 + static_cast<Index>(seed % 3);
    const Instance inst = generate_instance(n, d, seed);
    std::mt19937_64 rng(seed + 104729);
    const EvalContext cp(inst, Formulation::FullP);
    const EvalContext cl(inst, Formulation::ReducedL);
    const EvalContext ce(inst, Formulation::TriangularEll);
    const Vector xp = normal_vector(cp.dim(), rng);
    const Matrix P = cp.configuration(xp);
    const double f0 = value(xp, cp);
    const Eigen::RowVectorXd shift = normal_vector(d, rng).transpose();
    const Matrix Pt = P.rowwise() + shift;
    trans.observe(std::abs(value(cp.from_configuration(Pt), cp) - f0) / (1.0 + f0));
    const Matrix Q = random_orthogonal(d, seed);
    rot.observe(std::abs(value(cp.from_configuration(P * Q), cp) - f0) / (1.0 + f0));

    const Vector xl = normal_vector(cl.dim(), rng);
    const Matrix L = Eigen::Map<const Matrix>(xl.data(), n - 1, d);
    const double fl = value(xl, cl);
    const double fp = value(cp.from_configuration(cl.v() * L), cp);
    const TriangularReduction red = reduce_to_triangular(L);
    const double fe = value(red.ell, ce);
    lift.observe(std::max(std::abs(fp - fl), std::abs(fe - fl)) / (1.0 + fl));
    qr.observe((ltriag(red.ell, n, d) * red.Q.transpose() - L).norm() / (1.0 + L.norm()));
  }

  const std::pair<Index, Index> shapes[] = {{6, 2}, {8, 1}, {7, 3}, {10, 2}};
  std::uint64_t seed = 500;
  for (auto [n, d] : shapes) {
    const Instance inst = generate_instance(n, d, seed);
    const EvalContext cl(inst, Formulation::ReducedL);
    const EvalContext cp(inst, Formulation::FullP);
    const EvalContext ce(inst, Formulation::TriangularEll);
    SolveOptions opts;
    opts.trace = false;
    for (int s = 0; s < 5; ++s) {
      const SolveReport rep =
          trust_region_minimize(random_start(cl, start_seed(seed, s)), cl, opts);
      if (!rep.converged) continue;
      const Matrix P = cl.configuration(rep.x);
      const Vector xp = cp.from_configuration(P);
      const double gp = gradient(xp, cp).norm();
      gnorm.observe(std::abs(gp - rep.grad_norm) / (1e-300 + std::max(1.0, rep.grad_norm)));
      const Eigen::SelfAdjointEigenSolver<Matrix> ep(hessian_matrix(xp, cp),
                                                     Eigen::EigenvaluesOnly);
      const Eigen::SelfAdjointEigenSolver<Matrix> el(hessian_matrix(rep.x, cl),
                                                     Eigen::EigenvaluesOnly);
      std::vector<double> a(ep.eigenvalues().data(),
                            ep.eigenvalues().data() + ep.eigenvalues().size());
      std::vector<double> b(el.eigenvalues().data(),
                            el.eigenvalues().data() + el.eigenvalues().size());
      b.insert(b.end(), static_cast<std::size_t>(d), 0.0);
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      double worst = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
      spectrum.observe(worst / (1.0 + std::abs(a.back())));
      const Vector xe = ce.from_configuration(P);
      ell_stat.observe(gradient(xe, ce).norm() / rep.g_tol);
    }
    ++seed;
  }
  return {trans.result(), rot.result(), lift.result(), qr.result(),
          gnorm.result(), spectrum.result(), ell_stat.result()};
}

std::vector<CheckResult> theorems_suite(int threads) {
  std::vector<CheckResult> out;

  {
    const std::pair<Index, Index> shapes[] = {{2, 1}, {3, 2}, {4, 3}, {3, 3}};
    Tracker glob("n <= d+1: second-order points are global", kGlobalTol);
    int converged = 0;
    for (auto [n, d] : shapes) {
      const Instance inst = generate_instance(n, d, 11 * n + d);
      SolveOptions opts;
      opts.trace = false;
      opts.threads = threads;
      opts.seed = 2024;
      const double scale = 1.0 + inst.D.squaredNorm();
      for (const auto& rep : multi_start_scan(inst, Formulation::ReducedL, 50, opts)) {
        if (!rep.converged) continue;
        converged += rep.hits;
        glob.observe(rep.f / scale);
      }
    }
    CheckResult r = glob.result();
    r.detail = std::to_string(converged) + " converged runs of 200";
    out.push_back(r);
  }

  {
    const Instance inst = generate_instance(5, 2, 3);
    const EvalContext cp(inst, Formulation::FullP);
    Matrix P = Matrix::Zero(5, 2);
    P.rowwise() += Eigen::RowVector2d(0.3, -1.2);
    const Vector xp = cp.from_configuration(P);
    const Matrix H = hessian_matrix(xp, cp);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(H, Eigen::EigenvaluesOnly);
    const double hn = eig.eigenvalues().cwiseAbs().maxCoeff();
    const double top = eig.eigenvalues().maxCoeff();
    const double gn = gradient(xp, cp).norm();
    out.push_back(boolean_result(
        "collapsed configuration: stationary, Hessian nonzero and NSD",
        hn > 0.0 && top <= 1e-8 * hn && gn <= 1e-12 * (1.0 + hn), top / std::max(hn, 1e-300),
        "lambda_max / ||H|| reported"));
    const H2Pairing pair = h2_pairing(P, inst);
    const double target = -inst.D.squaredNorm();
    const double err = std::max(std::abs(pair.curvature - target),
                                std::abs(pair.neg_residual2 - target)) /
                       (1.0 + std::abs(target));
    out.push_back(boolean_result("h2_pairing at collapsed point equals -||D||^2",
                                 err <= 1e-12, err, "relative error"));
  }

  {
    Matrix tri(3, 2);
    tri << 0.0, 0.0, 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;
    const Instance inst = instance_from_points(tri);
    const EvalContext cl(inst, Formulation::ReducedL);
    const Witness w = negative_curvature_witness(Matrix::Zero(2, 2), cl);
    const double rel = std::abs(w.h2_curvature - w.closed_form) /
                       std::max(std::abs(w.closed_form), 1e-300);
    const double rel_full = std::abs(w.curvature - 2.0 * w.closed_form) /
                            std::max(std::abs(w.closed_form), 1e-300);
    out.push_back(boolean_result(
        "rank < d witness: negative curvature matching the closed form",
        w.curvature < 0.0 && rel <= 1e-10 && rel_full <= 1e-10 &&
            w.h1_residual <= 1e-10,
        std::max(rel, rel_full), "curvature " + std::to_string(w.curvature)));
  }

  {
    Instance zero;
    zero.n = 5;
    zero.d = 2;
    zero.D = Matrix::Zero(5, 5);
    SolveOptions opts;
    opts.trace = false;
    bool ok = true;
    int converged = 0;
    for (const auto& rep : multi_start_scan(zero, Formulation::ReducedL, 10, opts)) {
      if (!rep.converged) continue;
      converged += rep.hits;
      ok = ok && rep.classification == Classification::Global;
    }
    out.push_back(boolean_result("zero EDM: every stationary point is global",
                                 ok && converged > 0, converged,
                                 "converged runs reported"));
  }

  {
    // Nonglobal stationary points from a d = 1 line instance.
    Tracker pair("h2_pairing agreement at nonglobal stationary points", 1.0);
    int found = 0;
    for (std::uint64_t seed = 0; seed < 10 && found == 0; ++seed) {
      const Instance inst = generate_instance(30, 1, seed);
      const EvalContext cl(inst, Formulation::ReducedL);
      SolveOptions opts;
      opts.trace = false;
      opts.threads = threads;
      for (const auto& rep : multi_start_scan(inst, Formulation::ReducedL, 20, opts)) {
        if (!rep.converged || rep.classification == Classification::Global) continue;
        const Matrix P = cl.configuration(rep.x);
        const H2Pairing hp = h2_pairing(P, inst);
        const double bound = 0.5 * P.norm() * rep.grad_norm +
                             1e-10 * (1.0 + std::abs(hp.neg_residual2));
        pair.observe(std::abs(hp.curvature - hp.neg_residual2) / bound);
        if (!(hp.curvature < 0.0)) pair.fail("nonnegative pairing");
        ++found;
      }
    }
    if (found == 0) pair.fail("no nonglobal stationary point found");
    out.push_back(pair.result());
  }
  return out;
}

std::vector<CheckResult> certifier_suite(int threads) {
  std::vector<CheckResult> out;
  {
    const KantorovichParams k = kantorovich_from_scalars(1.0e-4, 1.3e-5, 651.0);
    const double ea = std::abs(k.alpha / 8.7e-7 - 1.0);
    const double er = k.r0 ? std::abs(*k.r0 / 1.3e-5 - 1.0) : INFINITY;
    out.push_back(boolean_result("Kantorovich arithmetic (beta=1e-4, gamma=651, eta=1.3e-5)",
                                 ea <= 0.05 && er <= 0.05, std::max(ea, er),
                                 "relative deviation from alpha=8.7e-7, r0=1.3e-5"));
  }
  {
    const double gamma = lipschitz_gamma_formula(2127.9, 50, 1e-3);
    const double floor = hessian_floor(211.0, 145.0, 1e-3);
    out.push_back(boolean_result("Lipschitz formula (sum=2127.9, n=50, r=1e-3) rounds up to 145",
                                 std::ceil(gamma) == 145.0 && floor > 0.0, gamma,
                                 "raw gamma reported"));
  }
  {
    Tracker vieta("Vieta identity r0 r1 (beta gamma)^2 = 2 alpha", 1e-12);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
      const double beta = std::exp(-5.0 * u(rng));
      const double gamma = std::exp(8.0 * u(rng));
      const double eta = 0.5 * u(rng) / (beta * gamma);
      const KantorovichParams k = kantorovich_from_scalars(beta, eta, gamma);
      if (!k.r0) continue;
      const double lhs = *k.r0 * *k.r1_unclamped * k.gamma_r * k.gamma_r;
      vieta.observe(std::abs(lhs - 2.0 * k.alpha) / std::max(2.0 * k.alpha, 1e-300));
      if (!(*k.r0 >= 0.0 && *k.r0 <= *k.r1_unclamped)) vieta.fail("r0 > r1");
    }
    out.push_back(vieta.result());
  }
  const struct {
    Index n;
    Index d;
    double r;
    int seeds;
    int starts;
  } pipelines[] = {{50, 1, 1e-3, 10, 20}, {20, 2, 1e-4, 20, 30}};
  for (const auto& pl : pipelines) {
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(pl.seeds));
    for (std::size_t s = 0; s < seeds.size(); ++s) seeds[s] = s;
    SolveOptions opts;
    opts.trace = false;
    opts.threads = threads;
    const std::string tag =
        "(n=" + std::to_string(pl.n) + ", d=" + std::to_string(pl.d) + ")";
    const LngmSearchResult res = search_certified_lngm(pl.n, pl.d, seeds, pl.starts, pl.r, opts);
    if (!res.found) {
      out.push_back(boolean_result("end-to-end certification " + tag, false, 0.0,
                                   "no certified candidate"));
      continue;
    }
    const Certificate& c = res.certificate;
    const EvalContext ctx(res.instance, c.formulation);
    const auto seq = newton_iterate(c.candidate, ctx, 8);
    const Vector& xs = seq.back();
    const auto [fs, gs] = value_and_gradient(xs, ctx);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(hessian_matrix(xs, ctx),
                                                   Eigen::EigenvaluesOnly);
    const double hn = es.eigenvalues().cwiseAbs().maxCoeff();
    const double dist = newton_offset(c.candidate, ctx).norm();
    const bool ok = dist <= *c.r0 * (1.0 + 1e-6) && gs.norm() <= 1e-12 * (1.0 + hn) &&
                    fs > c.fbar && c.fbar > 0.0 && es.eigenvalues()(0) >= c.lambda_floor;
    std::ostringstream msg;
    msg << "seed " << res.instance_seed << ", r=" << c.r << ", f=" << c.f
        << ", lambda_min=" << c.lambda_min << ", gamma=" << c.gamma
        << ", alpha=" << c.alpha << ", ||x*-x||=" << dist << ", r0=" << *c.r0;
    out.push_back(boolean_result("end-to-end certification and Newton limit " + tag,
                                 ok, dist / *c.r0, msg.str()));

    Tracker lip("sampled Hessian differences respect gamma " + tag, 1.0);
    Tracker var("sampled Hessian variation within the ball bound " + tag, 1.0);
    Tracker flo("sampled f > fbar and lambda_min > lambda_floor " + tag, 0.0);
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto sample = [&](double radius) {
      Vector dir = normal_vector(ctx.dim(), rng);
      return Vector(c.candidate + (radius * u(rng) / dir.norm()) * dir);
    };
    for (int i = 0; i < 50; ++i) {
      const Vector a = sample(c.r);
      const Vector b = sample(c.r);
      const double lhs = spectral_norm_sym(hessian_matrix(a, ctx) - hessian_matrix(b, ctx));
      lip.observe(lhs / (c.gamma * (a - b).norm()));
      var.observe(lhs / c.gamma_variation);
      const Vector z = sample(c.floor_radius.value_or(c.r));
      if (!(value(z, ctx) > c.fbar)) flo.fail("f <= fbar at a sample");
      const Eigen::SelfAdjointEigenSolver<Matrix> ea(hessian_matrix(a, ctx),
                                                     Eigen::EigenvaluesOnly);
      if (!(ea.eigenvalues()(0) > c.lambda_floor)) flo.fail("lambda_min <= floor at a sample");
      flo.observe(0.0);
    }
    out.push_back(lip.result());
    out.push_back(var.result());
    out.push_back(flo.result());
  }
  return out;
}

} // namespace

Vector fd_gradient(const Vector& x, const EvalContext& ctx) {
  Vector g(x.size());
  Vector xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x(i)));
    xp(i) = x(i) + h;
    const double fp = value(xp, ctx);
    xp(i) = x(i) - h;
    const double fm = value(xp, ctx);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Matrix fd_hessian(const Vector& x, const EvalContext& ctx) {
  const Index m = x.size();
  Matrix H(m, m);
  Vector xp = x;
  for (Index i = 0; i < m; ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x(i)));
    xp(i) = x(i) + h;
    const Vector gp = gradient(xp, ctx);
    xp(i) = x(i) - h;
    const Vector gm = gradient(xp, ctx);
    xp(i) = x(i);
    H.col(i) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

Matrix random_orthogonal(Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix A(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) A(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(A);
  return qr.householderQ() * Matrix::Identity(d, d);
}

Vector newton_offset(const Vector& x, const EvalContext& ctx, int steps) {
  const Eigen::LDLT<Matrix> ldlt(hessian_matrix(x, ctx));
  Vector delta = Vector::Zero(x.size());
  for (int k = 0; k < steps; ++k) {
    delta -= ldlt.solve(gradient_extended(x, ctx, delta));
  }
  return delta;
}

LngmSearchResult search_certified_lngm(Index n, Index d,
                                       const std::vector<std::uint64_t>& seeds,
                                       int starts, double r,
                                       const SolveOptions& opts) {
  LngmSearchResult res;
  for (std::uint64_t seed : seeds) {
    Instance inst = generate_instance(n, d, seed);
    SolveOptions o = opts;
    o.seed = seed;
    const auto reports = multi_start_scan(inst, Formulation::ReducedL, starts, o);
    const EvalContext ctx(inst, classification_formulation(d));
    for (const auto& rep : reports) {
      if (rep.classification != Classification::LngmCandidate) continue;
      Certificate cert = certify_lngm(rep.x, ctx.with_formulation(rep.formulation), r);
      if (cert.certified()) {
        res.found = true;
        res.instance_seed = seed;
        res.instance = std::move(inst);
        res.report = rep;
        res.certificate = std::move(cert);
        return res;
      }
    }
  }
  return res;
}

const std::vector<std::string>& check_suite_names() {
  static const std::vector<std::string> names = {"calculus", "equivalence",
                                                 "theorems", "certifier"};
  return names;
}

std::vector<CheckResult> run_check_suite(std::string_view suite, int threads) {
  if (suite == "calculus") return calculus_suite();
  if (suite == "equivalence") return equivalence_suite();
  if (suite == "theorems") return theorems_suite(threads);
  if (suite == "certifier") return certifier_suite(threads);
  throw DomainError("unknown check suite '" + std::string(suite) +
                    "' (expected calculus, equivalence, theorems or certifier)");
}

} // namespace edmstress
