#pragma once

#include "imdp/cmp.hpp"
#include "imdp/solver_linear.hpp"
#include "imdp/solver_relaxation.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace imdp {

using Json = nlohmann::json;

// Interchange format: { "k", "d", "M": [a][s][s'] }; inverse models add
// "defined" (plus order/horizon/first_action), policies use "table".

Json to_json(const ControlledMP& m);
ControlledMP cmp_from_json(const Json& j);

Json to_json(const MaskedInverseModel& b);
MaskedInverseModel inverse_from_json(const Json& j);

Json to_json(const Policy& pi);
Policy policy_from_json(const Json& j);

Json to_json(const SolutionSet& sol);
Json to_json(const RelaxationVerdict& v);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

/// Read/write helpers; throw ModelError with the offending path on failure.
Json load_json(const std::string& path);
void save_json(const std::string& path, const Json& j);
std::string load_text(const std::string& path);
void save_text(const std::string& path, const std::string& text);

}  // namespace imdp
