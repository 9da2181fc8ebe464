#include "edmstress/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace edmstress {

namespace {

[[noreturn]] void bad(const std::string& what) { throw ValidationError(what); }

double finite_number(const json& v, const std::string& field) {
  if (!v.is_number()) bad(field + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(field + ": NaN/Inf values are not allowed");
  return x;
}

json matrix_rows(const Matrix& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_rows(const json& j, Index rows, Index cols,
                        const std::string& field) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
    std::ostringstream msg;
    msg << field << ": expected " << rows << " rows";
    bad(msg.str());
  }
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      std::ostringstream msg;
      msg << field << ": row " << i << " must have " << cols << " entries";
      bad(msg.str());
    }
    for (Index c = 0; c < cols; ++c) {
      M(i, c) = finite_number(row[static_cast<std::size_t>(c)], field);
    }
  }
  return M;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) bad(field + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Index>(i)) = finite_number(j[i], field);
  }
  return v;
}

Index integer_field(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer()) {
    bad(std::string("missing or non-integer field '") + key + "'");
  }
  return j[key].get<Index>();
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return finite_number(j[key], key);
}

double read_number(const json& j, const char* key) {
  if (!j.contains(key)) bad(std::string("missing field '") + key + "'");
  return finite_number(j[key], key);
}

} // namespace

json instance_to_json(const Instance& instance) {
  json j;
  j["n"] = instance.n;
  j["d"] = instance.d;
  j["D"] = matrix_rows(instance.D);
  if (instance.P_bar) j["P_bar"] = matrix_rows(*instance.P_bar);
  j["seed"] = instance.seed;
  return j;
}

Instance instance_from_json(const json& j, bool strict) {
  if (!j.is_object()) bad("instance: expected a JSON object");
  Instance inst;
  inst.n = integer_field(j, "n");
  inst.d = integer_field(j, "d");
  if (inst.n < 2) bad("instance violates invariant: n >= 2");
  if (inst.d < 1) bad("instance violates invariant: d >= 1");
  if (!j.contains("D")) bad("missing field 'D'");
  inst.D = matrix_from_rows(j["D"], inst.n, inst.n, "D");
  if (j.contains("P_bar") && !j["P_bar"].is_null()) {
    inst.P_bar = matrix_from_rows(j["P_bar"], inst.n, inst.d, "P_bar");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      bad("seed: expected an integer");
    }
    inst.seed = j["seed"].get<std::uint64_t>();
  }
  validate_instance(inst, strict);
  return inst;
}

std::string instance_hash(const Instance& instance) {
  const std::string text = instance_to_json(instance).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json point_to_json(Formulation formulation, const Vector& x, Index n,
                   Index d) {
  json j;
  j["formulation"] = std::string(formulation_name(formulation));
  switch (formulation) {
  case Formulation::FullP:
    j["data"] = matrix_rows(Eigen::Map<const Matrix>(x.data(), n, d));
    break;
  case Formulation::ReducedL:
    j["data"] = matrix_rows(Eigen::Map<const Matrix>(x.data(), n - 1, d));
    break;
  case Formulation::TriangularEll:
    j["data"] = vector_json(x);
    break;
  }
  return j;
}

Vector point_from_json(const json& j, const Instance& instance,
                       Formulation* formulation) {
  if (!j.is_object() || !j.contains("formulation") ||
      !j["formulation"].is_string() || !j.contains("data")) {
    bad("point file needs string 'formulation' and 'data'");
  }
  Formulation f;
  try {
    f = parse_formulation(j["formulation"].get<std::string>());
  } catch (const DomainError& e) {
    bad(e.what());
  }
  if (formulation) *formulation = f;
  const Index n = instance.n;
  const Index d = instance.d;
  Vector x;
  switch (f) {
  case Formulation::FullP: {
    const Matrix P = matrix_from_rows(j["data"], n, d, "data");
    x = Eigen::Map<const Vector>(P.data(), P.size());
    break;
  }
  case Formulation::ReducedL: {
    const Matrix L = matrix_from_rows(j["data"], n - 1, d, "data");
    x = Eigen::Map<const Vector>(L.data(), L.size());
    break;
  }
  case Formulation::TriangularEll:
    x = vector_from_json(j["data"], "data");
    if (x.size() != tri_len(n, d)) {
      std::ostringstream msg;
      msg << "data: ell point needs " << tri_len(n, d) << " entries, got "
          << x.size();
      bad(msg.str());
    }
    break;
  }
  return x;
}

json evaluation_to_json(double f, double grad_norm,
                        std::optional<double> lambda_min) {
  return json{{"f", f}, {"grad_norm", grad_norm},
              {"lambda_min", optional_number(lambda_min)}};
}

json report_to_json(const SolveReport& r, Index n, Index d, bool with_trace) {
  json j;
  j["formulation"] = std::string(formulation_name(r.formulation));
  j["point"] = point_to_json(r.formulation, r.x, n, d);
  j["f"] = r.f;
  j["grad_norm"] = r.grad_norm;
  j["lambda_min"] = r.lambda_min;
  j["hessian_norm"] = r.hessian_norm;
  j["g_tol"] = r.g_tol;
  j["lambda_tol"] = r.lambda_tol;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["classification"] = std::string(classification_name(r.classification));
  j["start_index"] = r.start_index;
  j["hits"] = r.hits;
  if (!r.error.empty()) j["error"] = r.error;
  if (with_trace) {
    json trace = json::array();
    for (const auto& t : r.trace) {
      trace.push_back({{"f", t.f}, {"grad_norm", t.grad_norm}, {"radius", t.radius}});
    }
    j["trace"] = std::move(trace);
  }
  return j;
}

SolveReport report_from_json(const json& j, const Instance& instance) {
  SolveReport r;
  if (!j.contains("point")) bad("report: missing 'point'");
  r.x = point_from_json(j["point"], instance, &r.formulation);
  r.f = read_number(j, "f");
  r.grad_norm = read_number(j, "grad_norm");
  r.lambda_min = read_number(j, "lambda_min");
  r.hessian_norm = read_number(j, "hessian_norm");
  r.g_tol = read_number(j, "g_tol");
  r.lambda_tol = read_number(j, "lambda_tol");
  r.iterations = static_cast<int>(integer_field(j, "iterations"));
  r.converged = j.value("converged", false);
  r.classification = parse_classification(j.value("classification", "UNDETERMINED"));
  r.start_index = static_cast<int>(j.value("start_index", 0));
  r.hits = static_cast<int>(j.value("hits", 1));
  r.error = j.value("error", "");
  if (j.contains("trace")) {
    for (const auto& t : j["trace"]) {
      r.trace.push_back({read_number(t, "f"), read_number(t, "grad_norm"),
                         read_number(t, "radius")});
    }
  }
  return r;
}

json certificate_to_json(const Certificate& c, const Instance& instance) {
  json j;
  j["tool_version"] = std::string(kToolVersion);
  j["instance_hash"] = instance_hash(instance);
  j["formulation"] = std::string(formulation_name(c.formulation));
  j["candidate"] = point_to_json(c.formulation, c.candidate, instance.n, instance.d);
  j["r"] = c.r;
  j["safety_factor"] = c.safety_factor;
  j["eigen_slack"] = c.eigen_slack;
  j["row_margin_factor"] = c.row_margin_factor;
  j["distance_sum"] = c.distance_sum;
  j["gamma"] = c.gamma;
  j["gamma_variation"] = c.gamma_variation;
  j["lambda_min"] = c.lambda_min;
  j["lambda_floor"] = c.lambda_floor;
  j["f"] = c.f;
  j["fbar"] = c.fbar;
  j["grad_norm"] = c.grad_norm;
  j["floor_radius"] = optional_number(c.floor_radius);
  j["beta"] = c.beta;
  j["eta"] = c.eta;
  j["gamma_r"] = c.gamma_r;
  j["alpha"] = c.alpha;
  j["r0"] = optional_number(c.r0);
  j["r1"] = optional_number(c.r1);
  j["r1_unclamped"] = optional_number(c.r1_unclamped);
  j["rows_sigma_min"] = optional_number(c.rows_sigma_min);
  j["rows_margin"] = optional_number(c.rows_margin);
  j["newton_bound_printed"] = c.newton_bound_printed;
  j["newton_bound_classical"] = c.newton_bound_classical;
  j["verdict"] = c.certified() ? "CERTIFIED" : "FAILED";
  j["reason"] = c.reason;
  return j;
}

Certificate certificate_from_json(const json& j, const Instance& instance) {
  if (!j.is_object()) bad("certificate: expected a JSON object");
  if (j.value("instance_hash", "") != instance_hash(instance)) {
    bad("certificate: instance hash does not match the given instance");
  }
  Certificate c;
  if (!j.contains("candidate")) bad("certificate: missing 'candidate'");
  c.candidate = point_from_json(j["candidate"], instance, &c.formulation);
  c.r = read_number(j, "r");
  c.safety_factor = read_number(j, "safety_factor");
  c.eigen_slack = read_number(j, "eigen_slack");
  c.row_margin_factor = read_number(j, "row_margin_factor");
  c.distance_sum = read_number(j, "distance_sum");
  c.gamma = read_number(j, "gamma");
  c.gamma_variation = j.contains("gamma_variation") ? read_number(j, "gamma_variation") : 0.0;
  c.lambda_min = read_number(j, "lambda_min");
  c.lambda_floor = read_number(j, "lambda_floor");
  c.f = read_number(j, "f");
  c.fbar = read_number(j, "fbar");
  c.grad_norm = read_number(j, "grad_norm");
  c.floor_radius = read_optional(j, "floor_radius");
  c.beta = read_number(j, "beta");
  c.eta = read_number(j, "eta");
  c.gamma_r = read_number(j, "gamma_r");
  c.alpha = read_number(j, "alpha");
  c.r0 = read_optional(j, "r0");
  c.r1 = read_optional(j, "r1");
  c.r1_unclamped = read_optional(j, "r1_unclamped");
  c.rows_sigma_min = read_optional(j, "rows_sigma_min");
  c.rows_margin = read_optional(j, "rows_margin");
  c.newton_bound_printed = j.value("newton_bound_printed", std::vector<double>{});
  c.newton_bound_classical = j.value("newton_bound_classical", std::vector<double>{});
  const std::string verdict = j.value("verdict", "");
  if (verdict == "CERTIFIED") {
    c.verdict = Verdict::Certified;
  } else if (verdict == "FAILED") {
    c.verdict = Verdict::Failed;
  } else {
    bad("certificate: verdict must be CERTIFIED or FAILED");
  }
  c.reason = j.value("reason", "");
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

} // namespace edmstress
