#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "edmstress/io.hpp"
#include "helpers.hpp"

using namespace edmstress;

namespace {

// Text round trip, as a file would see it.
json reparse(const json& j) { return json::parse(j.dump()); }

}  // namespace

TEST_CASE("instance round trip is bitwise") {
  const Instance inst = generate_instance(7, 2, 11);
  const Instance back = instance_from_json(reparse(instance_to_json(inst)));
  CHECK(back.n == 7);
  CHECK(back.d == 2);
  CHECK(back.seed == 11);
  CHECK(back.D == inst.D);
  REQUIRE(back.P_bar);
  CHECK(*back.P_bar == *inst.P_bar);
  CHECK(instance_hash(back) == instance_hash(inst));
  CHECK(instance_hash(inst).size() == 16);
  CHECK(instance_hash(generate_instance(7, 2, 12)) != instance_hash(inst));
}

TEST_CASE("instance validation names the invariant") {
  json j = instance_to_json(generate_instance(4, 1, 0));
  SUBCASE("asymmetric") {
    j["D"][0][1] = 5.0;
    CHECK_THROWS_AS(instance_from_json(j), ValidationError);
  }
  SUBCASE("not hollow") {
    j["D"][2][2] = 1.0;
    CHECK_THROWS_AS(instance_from_json(j), ValidationError);
  }
  SUBCASE("negative entry") {
    j["D"][0][1] = -1.0;
    j["D"][1][0] = -1.0;
    CHECK_THROWS_AS(instance_from_json(j), ValidationError);
  }
  SUBCASE("NaN") {
    j["D"][0][1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(instance_from_json(j), ValidationError);
  }
  SUBCASE("shape") {
    j["n"] = 5;
    CHECK_THROWS_AS(instance_from_json(j), ValidationError);
  }
  SUBCASE("n too small") {
    j["n"] = 1;
    CHECK_THROWS_AS(instance_from_json(j), ValidationError);
  }
  SUBCASE("missing D") {
    j.erase("D");
    CHECK_THROWS_AS(instance_from_json(j), ValidationError);
  }
}

TEST_CASE("points in all formulations round trip") {
  const Instance inst = generate_instance(6, 3, 2);
  for (Formulation f : {Formulation::FullP, Formulation::ReducedL, Formulation::TriangularEll}) {
    const EvalContext ctx(inst, f);
    const Vector x = testutil::normal_vector(ctx.dim(), 5);
    Formulation got = Formulation::FullP;
    const Vector back = point_from_json(reparse(point_to_json(f, x, 6, 3)), inst, &got);
    CHECK(got == f);
    CHECK(back == x);
  }
  json bad = point_to_json(Formulation::TriangularEll, Vector::Zero(tri_len(6, 3)), 6, 3);
  bad["data"].push_back(1.0);
  CHECK_THROWS_AS(point_from_json(bad, inst), ValidationError);
  json unknown = {{"formulation", "Q"}, {"data", json::array()}};
  CHECK_THROWS(point_from_json(unknown, inst));
}

TEST_CASE("solve report round trip") {
  const Instance inst = generate_instance(8, 1, 4);
  const EvalContext ctx(inst, Formulation::ReducedL);
  const SolveReport rep = trust_region_minimize(random_start(ctx, 3), ctx);
  const json j = report_to_json(rep, 8, 1, true);
  const SolveReport back = report_from_json(reparse(j), inst);
  CHECK(back.x == rep.x);
  CHECK(back.f == rep.f);
  CHECK(back.grad_norm == rep.grad_norm);
  CHECK(back.lambda_min == rep.lambda_min);
  CHECK(back.classification == rep.classification);
  CHECK(back.iterations == rep.iterations);
  REQUIRE(back.trace.size() == rep.trace.size());
  for (std::size_t k = 0; k < rep.trace.size(); ++k) CHECK(back.trace[k].f == rep.trace[k].f);
  CHECK(report_to_json(back, 8, 1, true).dump() == j.dump());
}

TEST_CASE("certificate round trip and hash binding") {
  CertificateInputs in;
  in.d = 1;
  in.r = 1e-3;
  in.gamma = 145.0 / 3.0;
  in.lambda_min = 211.0 / 7.0;
  in.f = 2.6e3;
  in.fbar = 1e3;
  in.grad_norm = 1.8e-3;
  in.eta = 2.4e-6;
  in.beta = 1.0 / 3.0;
  Certificate c = assemble_certificate(in);
  const Instance inst = generate_instance(5, 1, 0);
  c.candidate = testutil::normal_vector(4, 1);
  c.formulation = Formulation::ReducedL;

  const json j = certificate_to_json(c, inst);
  CHECK(j["tool_version"] == std::string(kToolVersion));
  CHECK(j["verdict"] == "CERTIFIED");
  const Certificate back = certificate_from_json(reparse(j), inst);
  CHECK(back.candidate == c.candidate);
  CHECK(back.gamma == c.gamma);
  CHECK(back.lambda_floor == c.lambda_floor);
  CHECK(back.alpha == c.alpha);
  CHECK(back.r0 == c.r0);
  CHECK(back.rows_sigma_min == std::nullopt);
  CHECK(back.newton_bound_printed == c.newton_bound_printed);
  CHECK(back.verdict == c.verdict);
  CHECK(certificate_to_json(back, inst).dump() == j.dump());

  CHECK_THROWS_AS(certificate_from_json(j, generate_instance(5, 1, 1)), ValidationError);
  json tampered = j;
  tampered["verdict"] = "MAYBE";
  CHECK_THROWS_AS(certificate_from_json(tampered, inst), ValidationError);
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "edmstress_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "inst.json";
  const Instance inst = generate_instance(3, 2, 1);
  write_json_file(path, instance_to_json(inst));
  CHECK(instance_from_json(read_json_file(path)).D == inst.D);
  CHECK_THROWS_AS(read_json_file(dir / "missing.json"), ValidationError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("evaluation record") {
  const json j = evaluation_to_json(1.5, 0.25, std::nullopt);
  CHECK(j["f"] == 1.5);
  CHECK(j["lambda_min"].is_null());
}
