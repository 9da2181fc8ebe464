#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "edmstress/certifier.hpp"
#include "edmstress/solver.hpp"

namespace edmstress {

using json = nlohmann::json;

inline constexpr std::string_view kToolVersion = "0.1.0";

// {"n", "d", "D" (row-major n x n), "P_bar" (optional n x d), "seed"}
json instance_to_json(const Instance& instance);
Instance instance_from_json(const json& j, bool strict = false);

// FNV-1a of the serialized instance, as 16 hex digits.
std::string instance_hash(const Instance& instance);

// {"formulation": "P" | "L" | "ell", "data": array}; P and L as row-major
// nested arrays, ell as a flat array.
json point_to_json(Formulation formulation, const Vector& x, Index n, Index d);
Vector point_from_json(const json& j, const Instance& instance,
                       Formulation* formulation = nullptr);

json evaluation_to_json(double f, double grad_norm,
                        std::optional<double> lambda_min);

json report_to_json(const SolveReport& report, Index n, Index d,
                    bool with_trace);
SolveReport report_from_json(const json& j, const Instance& instance);

json certificate_to_json(const Certificate& cert, const Instance& instance);
Certificate certificate_from_json(const json& j, const Instance& instance);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

} // namespace edmstress
