// JSON round-trips for the core types and the float formatting used by reports.
//
// Matrices are stored as {"labels", "dims", "re", "im"} with re/im as row-major
// nested lists. Kraus maps carry their spaces and a list of such blocks.
#pragma once

#include "qdec/channels.hpp"
#include "qdec/qmat.hpp"
#include "qdec/twirl.hpp"

#include <json.hpp>

#include <string>

namespace qdec {

using Json = nlohmann::json;

// %.17g; non-finite values become "inf", "-inf" or "nan"
std::string format_double(double x);
// inverse of format_double (also accepts anything strtod accepts)
double parse_double(const std::string& s);

Json to_json(const SubsystemSpace& s);
Json to_json(const Mat& m);
Json to_json(const LabeledOperator& op);
Json to_json(const DensityOp& rho);
Json to_json(const PureState& psi);
Json to_json(const KrausMap& t);
Json to_json(const McEstimate& e);

SubsystemSpace space_from_json(const Json& j);
Mat mat_from_json(const Json& j);
LabeledOperator operator_from_json(const Json& j);
DensityOp density_from_json(const Json& j);
PureState pure_from_json(const Json& j);
KrausMap kraus_from_json(const Json& j);
McEstimate mc_estimate_from_json(const Json& j);

}  // namespace qdec
