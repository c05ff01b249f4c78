#pragma once

/// @file json_io.hpp
/// @brief JSON serialization of the laboratory's states, runs, and reports,
///        plus structured parsing (errors name the offending field) and
///        file round-trip helpers.

#include <string>

#include "json.hpp"
#include "riccilab/entropy.hpp"
#include "riccilab/flow.hpp"
#include "riccilab/fokker_planck.hpp"
#include "riccilab/metric.hpp"
#include "riccilab/otto.hpp"
#include "riccilab/perelman.hpp"
#include "riccilab/transport.hpp"

namespace riccilab {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Enum names.
// ---------------------------------------------------------------------------

std::string backend_name(Backend b);
Backend backend_from_name(const std::string& name);
std::string topology_name(Topology t);
Topology topology_from_name(const std::string& name);
std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);
std::string backward_kind_name(BackwardKind k);
BackwardKind backward_kind_from_name(const std::string& name);

// ---------------------------------------------------------------------------
// Structured field access.  `context` names the object being parsed so the
// error message reads "<context>: missing field 'dt'" or
// "<context>: field 'dt' must be a number".
// ---------------------------------------------------------------------------

const Json& require_field(const Json& j, const std::string& field, const std::string& context);
double get_double(const Json& j, const std::string& field, const std::string& context);
double get_double_or(const Json& j, const std::string& field, double fallback,
                     const std::string& context);
int get_int(const Json& j, const std::string& field, const std::string& context);
int get_int_or(const Json& j, const std::string& field, int fallback, const std::string& context);
bool get_bool_or(const Json& j, const std::string& field, bool fallback,
                 const std::string& context);
std::string get_string(const Json& j, const std::string& field, const std::string& context);
std::string get_string_or(const Json& j, const std::string& field, const std::string& fallback,
                          const std::string& context);

// ---------------------------------------------------------------------------
// Serializers.
// ---------------------------------------------------------------------------

Json json_of(const Mesh1D& mesh);
Json json_of(const MetricState& state);
Json json_of(const FlowConfig& config);
Json json_of(const CurvatureSummary& summary);
Json json_of(const Trajectory& traj);
Json json_of(const BackwardConfig& config);
Json json_of(const BackwardRun& run);
Json json_of(const FPRun& run);
Json json_of(const FunctionalReport& report);
Json json_of(const SeriesResidual& series);
Json json_of(const WflowReport& report);
Json json_of(const WMonotonicityReport& report);
Json json_of(const CurvatureEntropyReport& report);
Json json_of(const ScalarEvolutionResidual& report);
Json json_of(const GradientIdentityReport& report);
Json json_of(const FisherReport& report);
Json json_of(const ConvergenceReport& report);
Json json_of(const HJResidualReport& report);
Json json_of(const HopfColeSweep& sweep);
Json json_of(const ComparisonReport& report);
Json json_of(const PhiEnergyReport& report);
Json json_of(const InequalityReport& report);
Json json_of(const CurveLengthReport& report);

// ---------------------------------------------------------------------------
// Parsers (inverse of the serializers where round-trips are needed).
// ---------------------------------------------------------------------------

Mesh1D mesh_from_json(const Json& j);
MetricState state_from_json(const Json& j);
FlowConfig flow_config_from_json(const Json& j);
BackwardConfig backward_config_from_json(const Json& j);
Trajectory trajectory_from_json(const Json& j);
BackwardRun backward_run_from_json(const Json& j);

// ---------------------------------------------------------------------------
// Files.
// ---------------------------------------------------------------------------

void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

}  // namespace riccilab
