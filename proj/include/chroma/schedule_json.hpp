#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "chroma/adaptation.hpp"
#include "chroma/power_model.hpp"

namespace chroma {

using Json = nlohmann::json;

inline constexpr const char* kScheduleSchema = "chroma.schedule/1";

// Trajectory: {"kind": "linear", "phi": 1.47} or {"kind": "daylight"}.
Json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const Json& j);

// {"schema": ..., "type": "triphasic", "trajectory": ..., "v", "D", "t1", "t2"}
Json to_json(const TriphasicSchedule& s);
TriphasicSchedule triphasic_from_json(const Json& j);

// {"schema": ..., "type": "deployment", "trajectory": ..., "v", "t_max"}
Json to_json(const DeploymentSchedule& s);
DeploymentSchedule deployment_from_json(const Json& j);

// {"k1": .., "k2": ..}
Json to_json(const AdaptationParams& p);
AdaptationParams adaptation_params_from_json(const Json& j);

// {"per_channel": [r, g, b], "static": p}
Json to_json(const DisplayPowerParams& p);
DisplayPowerParams display_params_from_json(const Json& j);

/// Parses a document; errors are reported as Error(Format) / Error(Io).
Json parse_json(const std::string& text, const std::string& what = "json");
Json read_json_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_json_file(const std::filesystem::path& path, const Json& j);

/// Typed field access with Error(Format) on a missing or mistyped field.
double json_number(const Json& j, const char* key);
double json_number(const Json& j, const char* key, double fallback);

}  // namespace chroma
