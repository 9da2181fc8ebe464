// edmstress: batch driver for instance generation, minimization,
// certification and the property suites.
//
// Exit codes: 0 success / CERTIFIED, 1 verification FAILED,
// 2 usage or input error, 3 numerical error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "edmstress/certifier.hpp"
#include "edmstress/checks.hpp"
#include "edmstress/io.hpp"
#include "edmstress/solver.hpp"

using namespace edmstress;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

int env_threads() {
  const char* raw = std::getenv("EDMSTRESS_THREADS");
  if (!raw || !*raw) return 1;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) {
    throw ValidationError("EDMSTRESS_THREADS must be an integer in [1, 1024]");
  }
  return static_cast<int>(v);
}

void emit(const json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(out, j);
  }
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open '" + path + "' for writing");
  os.precision(17);
  return os;
}

Instance load_instance(const std::string& path) {
  return instance_from_json(read_json_file(path));
}

// Accepts a bare point, a single report, or a minimize output; from the
// latter takes reports[index], or the first LNGM_CANDIDATE when index < 0.
Vector load_point(const std::string& path, const Instance& inst, int index,
                  Formulation* formulation) {
  const json j = read_json_file(path);
  if (j.contains("reports")) {
    const json& reports = j["reports"];
    if (!reports.is_array() || reports.empty()) {
      throw ValidationError(path + ": 'reports' is empty");
    }
    if (index >= 0) {
      if (static_cast<std::size_t>(index) >= reports.size()) {
        throw ValidationError(path + ": report index out of range");
      }
      return point_from_json(reports[static_cast<std::size_t>(index)]["point"],
                             inst, formulation);
    }
    for (const auto& r : reports) {
      if (r.value("classification", "") == "LNGM_CANDIDATE") {
        return point_from_json(r["point"], inst, formulation);
      }
    }
    throw ValidationError(path + ": no LNGM_CANDIDATE report; pass --index");
  }
  if (j.contains("point")) return point_from_json(j["point"], inst, formulation);
  return point_from_json(j, inst, formulation);
}

void write_trace_csv(const std::string& path, const std::vector<SolveReport>& reports) {
  std::ofstream os = open_csv(path);
  os << "start,iteration,f,grad_norm,radius\n";
  for (const auto& r : reports) {
    for (std::size_t k = 0; k < r.trace.size(); ++k) {
      os << r.start_index << ',' << k << ',' << r.trace[k].f << ','
         << r.trace[k].grad_norm << ',' << r.trace[k].radius << '\n';
    }
  }
}

void write_spectrum_csv(const std::string& path, const Vector& x, const EvalContext& ctx) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian_matrix(x, ctx),
                                                  Eigen::EigenvaluesOnly);
  std::ofstream os = open_csv(path);
  os << "index,eigenvalue\n";
  for (Index k = 0; k < eig.eigenvalues().size(); ++k) {
    os << k << ',' << eig.eigenvalues()(k) << '\n';
  }
}

struct GenArgs {
  Index n = 0;
  Index d = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  emit(instance_to_json(generate_instance(a.n, a.d, a.seed)), a.out);
  return kExitOk;
}

struct EvalArgs {
  std::string instance;
  std::string point;
  int index = -1;
  std::string spectrum_csv;
  std::string out;
};

int cmd_eval(const EvalArgs& a) {
  const Instance inst = load_instance(a.instance);
  Formulation form;
  const Vector x = load_point(a.point, inst, a.index, &form);
  const EvalContext ctx(inst, form);
  const auto [f, g] = value_and_gradient(x, ctx);
  std::optional<double> lambda_min;
  if (ctx.dim() <= kDenseHessianLimit) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian_matrix(x, ctx),
                                                    Eigen::EigenvaluesOnly);
    lambda_min = eig.eigenvalues()(0);
  }
  if (!a.spectrum_csv.empty()) write_spectrum_csv(a.spectrum_csv, x, ctx);
  json j = evaluation_to_json(f, g.norm(), lambda_min);
  j["formulation"] = std::string(formulation_name(form));
  emit(j, a.out);
  return kExitOk;
}

struct MinimizeArgs {
  std::string instance;
  std::string formulation = "L";
  std::string start;
  int starts = 20;
  std::uint64_t seed = 0;
  int max_iters = 500;
  bool trace = false;
  std::string csv;
  std::string out;
};

int cmd_minimize(const MinimizeArgs& a) {
  const Instance inst = load_instance(a.instance);
  SolveOptions opts;
  opts.seed = a.seed;
  opts.max_iters = a.max_iters;
  opts.trace = a.trace || !a.csv.empty();
  opts.threads = env_threads();

  std::vector<SolveReport> reports;
  Formulation form = parse_formulation(a.formulation);
  if (!a.start.empty()) {
    const Vector x0 = load_point(a.start, inst, 0, &form);
    reports.push_back(trust_region_minimize(x0, EvalContext(inst, form), opts));
  } else {
    reports = multi_start_scan(inst, form, a.starts, opts);
  }

  std::map<std::string, int> counts;
  json list = json::array();
  for (const auto& r : reports) {
    counts[r.error.empty() ? std::string(classification_name(r.classification))
                           : std::string("ERROR")] += r.hits;
    list.push_back(report_to_json(r, inst.n, inst.d, a.trace));
  }
  json j;
  j["tool_version"] = std::string(kToolVersion);
  j["instance_hash"] = instance_hash(inst);
  j["search_formulation"] = std::string(formulation_name(form));
  j["starts"] = a.start.empty() ? a.starts : 1;
  j["seed"] = a.seed;
  j["summary"] = counts;
  j["reports"] = std::move(list);
  emit(j, a.out);
  if (!a.csv.empty()) write_trace_csv(a.csv, reports);

  std::cerr << "minimize:";
  for (const auto& [name, count] : counts) std::cerr << ' ' << name << '=' << count;
  std::cerr << " (" << reports.size() << " distinct)\n";
  return kExitOk;
}

struct CertifyArgs {
  std::string instance;
  std::string point;
  int index = -1;
  double r = 1e-3;
  std::optional<double> fbar;
  std::string verify;
  std::string out;
};

int cmd_certify(const CertifyArgs& a) {
  const Instance inst = load_instance(a.instance);
  if (!a.verify.empty()) {
    const Certificate stored = certificate_from_json(read_json_file(a.verify), inst);
    const VerifyResult v = verify_certificate(stored, EvalContext(inst, stored.formulation));
    std::cerr << "verify: stored " << (stored.certified() ? "CERTIFIED" : "FAILED")
              << ", recomputed " << (v.recomputed.certified() ? "CERTIFIED" : "FAILED")
              << ", max relative difference " << v.max_rel_diff << '\n';
    if (!v.recomputed.reason.empty()) std::cerr << "reason: " << v.recomputed.reason << '\n';
    return v.verdict_matches && v.recomputed.certified() ? kExitOk : kExitFailed;
  }
  if (a.point.empty()) throw ValidationError("certify needs --point or --verify");
  Formulation form;
  const Vector x = load_point(a.point, inst, a.index, &form);
  const Certificate c = certify_lngm(x, EvalContext(inst, form), a.r, a.fbar);
  emit(certificate_to_json(c, inst), a.out);
  std::cerr << "certify: " << (c.certified() ? "CERTIFIED" : "FAILED");
  if (!c.reason.empty()) std::cerr << " (" << c.reason << ')';
  std::cerr << '\n';
  return c.certified() ? kExitOk : kExitFailed;
}

struct NewtonArgs {
  std::string instance;
  std::string point;
  int index = -1;
  int steps = 8;
  std::string csv;
  std::string out;
};

int cmd_newton(const NewtonArgs& a) {
  const Instance inst = load_instance(a.instance);
  Formulation form;
  const Vector x0 = load_point(a.point, inst, a.index, &form);
  const EvalContext ctx(inst, form);
  const std::vector<Vector> seq = newton_iterate(x0, ctx, a.steps);
  json steps = json::array();
  std::vector<double> gnorms;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const auto [f, g] = value_and_gradient(seq[k], ctx);
    gnorms.push_back(g.norm());
    steps.push_back({{"iteration", k}, {"f", f}, {"grad_norm", g.norm()},
                     {"distance_to_last", (seq[k] - seq.back()).norm()}});
  }
  json j;
  j["formulation"] = std::string(formulation_name(form));
  j["steps"] = std::move(steps);
  j["limit"] = point_to_json(form, seq.back(), inst.n, inst.d);
  emit(j, a.out);
  if (!a.csv.empty()) {
    std::ofstream os = open_csv(a.csv);
    os << "iteration,grad_norm,distance_to_last\n";
    for (std::size_t k = 0; k < seq.size(); ++k) {
      os << k << ',' << gnorms[k] << ',' << (seq[k] - seq.back()).norm() << '\n';
    }
  }
  return kExitOk;
}

struct ReduceArgs {
  std::string instance;
  std::string point;
  int index = 0;
  std::string out;
};

int cmd_reduce(const ReduceArgs& a) {
  const Instance inst = load_instance(a.instance);
  Formulation form;
  const Vector x = load_point(a.point, inst, a.index, &form);
  const EvalContext ctx(inst, form);
  const EvalContext ell(inst, Formulation::TriangularEll);
  const Matrix L = ctx.v().transpose() * ctx.configuration(x);
  const TriangularReduction red = reduce_to_triangular(L);
  json j;
  j["point"] = point_to_json(Formulation::TriangularEll, red.ell, inst.n, inst.d);
  json q = json::array();
  for (Index i = 0; i < red.Q.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < red.Q.cols(); ++k) row.push_back(red.Q(i, k));
    q.push_back(std::move(row));
  }
  j["Q"] = std::move(q);
  j["rank_deficient"] = red.rank_deficient;
  j["f"] = value(red.ell, ell);
  emit(j, a.out);
  return kExitOk;
}

int cmd_check(const std::string& suite) {
  std::vector<std::string> names;
  if (suite == "all") {
    names = check_suite_names();
  } else {
    names = {suite};
  }
  const int threads = env_threads();
  bool all_ok = true;
  for (const auto& name : names) {
    for (const auto& r : run_check_suite(name, threads)) {
      all_ok = all_ok && r.passed;
      std::cout << (r.passed ? "PASS " : "FAIL ") << name << ": " << r.name
                << "  worst=" << r.worst;
      if (r.tolerance > 0.0) std::cout << " tol=" << r.tolerance;
      if (!r.detail.empty()) std::cout << "  [" << r.detail << ']';
      std::cout << '\n';
    }
  }
  return all_ok ? kExitOk : kExitFailed;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smooth-stress EDM objective: minimization and lngm certificates"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a random instance from centered normal points");
  g->add_option("--n", gen.n, "number of points")->required()->check(CLI::Range(2, 100000));
  g->add_option("--d", gen.d, "embedding dimension")->required()->check(CLI::Range(1, 1000));
  g->add_option("--seed", gen.seed, "generator seed");
  g->add_option("--out", gen.out, "output file (default stdout)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate f, ||g|| and lambda_min at a point");
  e->add_option("--instance", ev.instance)->required()->check(CLI::ExistingFile);
  e->add_option("--point", ev.point)->required()->check(CLI::ExistingFile);
  e->add_option("--index", ev.index, "report index inside a minimize output");
  e->add_option("--spectrum-csv", ev.spectrum_csv, "write Hessian eigenvalues as CSV");
  e->add_option("--out", ev.out);

  MinimizeArgs mn;
  auto* m = app.add_subcommand("minimize", "Multi-start trust-region search");
  m->add_option("--instance", mn.instance)->required()->check(CLI::ExistingFile);
  m->add_option("--formulation", mn.formulation, "P, L or ell")
      ->check(CLI::IsMember({"P", "L", "ell"}));
  m->add_option("--starts", mn.starts)->check(CLI::Range(1, 1000000));
  m->add_option("--seed", mn.seed, "master seed");
  m->add_option("--start", mn.start, "single run from this point file")->check(CLI::ExistingFile);
  m->add_option("--max-iters", mn.max_iters)->check(CLI::Range(0, 100000000));
  m->add_flag("--trace", mn.trace, "include per-iteration traces in the report");
  m->add_option("--csv", mn.csv, "write f vs iteration as CSV");
  m->add_option("--out", mn.out);

  CertifyArgs ce;
  auto* c = app.add_subcommand("certify", "Kantorovich certificate for a candidate point");
  c->add_option("--instance", ce.instance)->required()->check(CLI::ExistingFile);
  c->add_option("--point", ce.point)->check(CLI::ExistingFile);
  c->add_option("--index", ce.index, "report index inside a minimize output");
  c->add_option("--r", ce.r, "ball radius")->check(CLI::PositiveNumber);
  c->add_option("--fbar", ce.fbar, "objective floor (default f/2)")->check(CLI::PositiveNumber);
  c->add_option("--verify", ce.verify, "recheck a stored certificate")->check(CLI::ExistingFile);
  c->add_option("--out", ce.out);

  NewtonArgs nw;
  auto* n = app.add_subcommand("newton", "Plain Newton iterates from a point");
  n->add_option("--instance", nw.instance)->required()->check(CLI::ExistingFile);
  n->add_option("--point", nw.point)->required()->check(CLI::ExistingFile);
  n->add_option("--index", nw.index);
  n->add_option("--steps", nw.steps)->check(CLI::Range(0, 1000));
  n->add_option("--csv", nw.csv, "write ||g|| per iterate as CSV");
  n->add_option("--out", nw.out);

  ReduceArgs rd;
  auto* r = app.add_subcommand("reduce", "Rotate a point into triangular ell coordinates");
  r->add_option("--instance", rd.instance)->required()->check(CLI::ExistingFile);
  r->add_option("--point", rd.point)->required()->check(CLI::ExistingFile);
  r->add_option("--index", rd.index);
  r->add_option("--out", rd.out);

  std::string suite;
  auto* k = app.add_subcommand("check", "Run a property suite");
  k->add_option("suite", suite, "calculus, equivalence, theorems, certifier or all")
      ->required()
      ->check(CLI::IsMember({"calculus", "equivalence", "theorems", "certifier", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitUsage;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*e) return cmd_eval(ev);
    if (*m) return cmd_minimize(mn);
    if (*c) return cmd_certify(ce);
    if (*n) return cmd_newton(nw);
    if (*r) return cmd_reduce(rd);
    if (*k) return cmd_check(suite);
  } catch (const NumericalError& ex) {
    std::cerr << "edmstress: numerical error: " << ex.what() << '\n';
    return kExitNumerical;
  } catch (const Error& ex) {
    std::cerr << "edmstress: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    std::cerr << "edmstress: " << ex.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
