#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "edmstress/certifier.hpp"
#include "edmstress/checks.hpp"
#include "edmstress/io.hpp"
#include "edmstress/solver.hpp"

namespace py = pybind11;
using namespace edmstress;

namespace {

std::string certificate_json(const Certificate& c, const Instance& inst) {
  return certificate_to_json(c, inst).dump(2);
}

}  // namespace

PYBIND11_MODULE(_edmstress, m) {
  m.doc() = "Smooth-stress EDM objective, trust-region search and Kantorovich certificates";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<SymmetryError>(m, "SymmetryError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<SingularityError>(m, "SingularityError", numerical.ptr());

  py::class_<Instance>(m, "Instance")
      .def(py::init<>())
      .def_readwrite("n", &Instance::n)
      .def_readwrite("d", &Instance::d)
      .def_readwrite("D", &Instance::D)
      .def_readwrite("P_bar", &Instance::P_bar)
      .def_readwrite("seed", &Instance::seed)
      .def("validate", &validate_instance, py::arg("strict") = false)
      .def("to_json", [](const Instance& i) { return instance_to_json(i).dump(); })
      .def_static("from_json", [](const std::string& s) { return instance_from_json(json::parse(s)); })
      .def("hash", &instance_hash);

  m.def("generate_instance", &generate_instance, py::arg("n"), py::arg("d"), py::arg("seed"));
  m.def("instance_from_points", &instance_from_points, py::arg("P"), py::arg("seed") = 0);
  m.def("lindenstrauss", &lindenstrauss, py::arg("G"));
  m.def("lindenstrauss_adjoint", &lindenstrauss_adjoint, py::arg("S"));
  m.def("edm_of", &edm_of, py::arg("P"));
  m.def("build_v", &build_v, py::arg("n"));
  m.def("tri_len", &tri_len, py::arg("n"), py::arg("d"));
  m.def("ltriag", &ltriag, py::arg("ell"), py::arg("n"), py::arg("d"));
  m.def("ltriag_adjoint", &ltriag_adjoint, py::arg("L"));
  m.def("center", &center, py::arg("P"));

  py::class_<TriangularReduction>(m, "TriangularReduction")
      .def_readonly("ell", &TriangularReduction::ell)
      .def_readonly("Q", &TriangularReduction::Q)
      .def_readonly("rank_deficient", &TriangularReduction::rank_deficient);
  m.def("reduce_to_triangular", &reduce_to_triangular, py::arg("L"));

  py::enum_<Formulation>(m, "Formulation")
      .value("P", Formulation::FullP)
      .value("L", Formulation::ReducedL)
      .value("ELL", Formulation::TriangularEll);

  py::class_<EvalContext>(m, "EvalContext")
      .def(py::init<Instance, Formulation>(), py::arg("instance"), py::arg("formulation"))
      .def_property_readonly("formulation", &EvalContext::formulation)
      .def_property_readonly("instance", &EvalContext::instance)
      .def_property_readonly("V", &EvalContext::v)
      .def_property_readonly("dim", &EvalContext::dim)
      .def("with_formulation", &EvalContext::with_formulation)
      .def("configuration", &EvalContext::configuration, py::arg("x"))
      .def("from_configuration", &EvalContext::from_configuration, py::arg("P"));

  m.def("value", &value, py::arg("x"), py::arg("ctx"));
  m.def("gradient", &gradient, py::arg("x"), py::arg("ctx"));
  m.def("hessian", &hessian_matrix, py::arg("x"), py::arg("ctx"));
  m.def("hessian_apply", &hessian_apply, py::arg("x"), py::arg("dx"), py::arg("ctx"));

  py::enum_<Classification>(m, "Classification")
      .value("GLOBAL", Classification::Global)
      .value("LNGM_CANDIDATE", Classification::LngmCandidate)
      .value("SADDLE", Classification::Saddle)
      .value("MAXIMIZER", Classification::Maximizer)
      .value("UNDETERMINED", Classification::Undetermined);

  py::class_<SolveOptions>(m, "SolveOptions")
      .def(py::init<>())
      .def_readwrite("max_iters", &SolveOptions::max_iters)
      .def_readwrite("g_tol_rel", &SolveOptions::g_tol_rel)
      .def_readwrite("lambda_tol_rel", &SolveOptions::lambda_tol_rel)
      .def_readwrite("initial_radius", &SolveOptions::initial_radius)
      .def_readwrite("max_radius", &SolveOptions::max_radius)
      .def_readwrite("seed", &SolveOptions::seed)
      .def_readwrite("trace", &SolveOptions::trace)
      .def_readwrite("threads", &SolveOptions::threads);

  py::class_<SolveReport>(m, "SolveReport")
      .def_readonly("formulation", &SolveReport::formulation)
      .def_readonly("x", &SolveReport::x)
      .def_readonly("f", &SolveReport::f)
      .def_readonly("grad_norm", &SolveReport::grad_norm)
      .def_readonly("lambda_min", &SolveReport::lambda_min)
      .def_readonly("iterations", &SolveReport::iterations)
      .def_readonly("converged", &SolveReport::converged)
      .def_readonly("classification", &SolveReport::classification)
      .def_readonly("start_index", &SolveReport::start_index)
      .def_readonly("hits", &SolveReport::hits)
      .def_property_readonly("trace_f", [](const SolveReport& r) {
        std::vector<double> f;
        for (const auto& t : r.trace) f.push_back(t.f);
        return f;
      });

  m.def("trust_region_minimize", &trust_region_minimize, py::arg("x0"), py::arg("ctx"),
        py::arg("options") = SolveOptions{}, py::call_guard<py::gil_scoped_release>());
  m.def("multi_start_scan", &multi_start_scan, py::arg("instance"), py::arg("formulation"),
        py::arg("starts"), py::arg("options") = SolveOptions{}, py::call_guard<py::gil_scoped_release>());
  m.def("newton_iterate", &newton_iterate, py::arg("x0"), py::arg("ctx"), py::arg("steps"));
  m.def("random_start", &random_start, py::arg("ctx"), py::arg("seed"));

  py::class_<KantorovichParams>(m, "KantorovichParams")
      .def_readonly("beta", &KantorovichParams::beta)
      .def_readonly("eta", &KantorovichParams::eta)
      .def_readonly("gamma_r", &KantorovichParams::gamma_r)
      .def_readonly("alpha", &KantorovichParams::alpha)
      .def_readonly("r0", &KantorovichParams::r0)
      .def_readonly("r1_unclamped", &KantorovichParams::r1_unclamped);
  m.def("kantorovich_from_scalars", &kantorovich_from_scalars, py::arg("beta"), py::arg("eta"),
        py::arg("gamma"));
  m.def("hessian_floor", &hessian_floor, py::arg("lambda_min"), py::arg("gamma"), py::arg("r"));
  m.def("lipschitz_gamma_formula", &lipschitz_gamma_formula, py::arg("distance_sum"), py::arg("n"),
        py::arg("r"));
  m.def("hessian_lipschitz_bound", &hessian_lipschitz_bound, py::arg("distance_sum"), py::arg("n"),
        py::arg("r"));

  py::class_<Certificate>(m, "Certificate")
      .def_readonly("formulation", &Certificate::formulation)
      .def_readonly("candidate", &Certificate::candidate)
      .def_readonly("r", &Certificate::r)
      .def_readonly("gamma", &Certificate::gamma)
      .def_readonly("gamma_variation", &Certificate::gamma_variation)
      .def_readonly("lambda_min", &Certificate::lambda_min)
      .def_readonly("lambda_floor", &Certificate::lambda_floor)
      .def_readonly("f", &Certificate::f)
      .def_readonly("fbar", &Certificate::fbar)
      .def_readonly("grad_norm", &Certificate::grad_norm)
      .def_readonly("beta", &Certificate::beta)
      .def_readonly("eta", &Certificate::eta)
      .def_readonly("alpha", &Certificate::alpha)
      .def_readonly("r0", &Certificate::r0)
      .def_readonly("r1", &Certificate::r1)
      .def_readonly("rows_sigma_min", &Certificate::rows_sigma_min)
      .def_readonly("reason", &Certificate::reason)
      .def_property_readonly("certified", &Certificate::certified)
      .def("to_json", &certificate_json, py::arg("instance"));
  py::class_<CertifyOptions>(m, "CertifyOptions")
      .def(py::init<>())
      .def_readwrite("safety_factor", &CertifyOptions::safety_factor)
      .def_readwrite("eigen_slack", &CertifyOptions::eigen_slack)
      .def_readwrite("row_margin_factor", &CertifyOptions::row_margin_factor);
  m.def("certify_lngm", &certify_lngm, py::arg("x"), py::arg("ctx"), py::arg("r"),
        py::arg("fbar") = std::nullopt, py::arg("options") = CertifyOptions{});

  py::class_<CheckResult>(m, "CheckResult")
      .def_readonly("name", &CheckResult::name)
      .def_readonly("passed", &CheckResult::passed)
      .def_readonly("worst", &CheckResult::worst)
      .def_readonly("tolerance", &CheckResult::tolerance)
      .def_readonly("detail", &CheckResult::detail);
  m.def("check_suite_names", &check_suite_names);
  m.def("run_check_suite", &run_check_suite, py::arg("suite"), py::arg("threads") = 1);

  m.attr("__version__") = std::string(kToolVersion);
}
