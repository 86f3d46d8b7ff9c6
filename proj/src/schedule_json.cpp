#include "chroma/schedule_json.hpp"

#include <fstream>
#include <sstream>

namespace chroma {

namespace {

void expect_object(const Json& j, const char* what) {
  if (!j.is_object()) throw Error(ErrorCode::Format, std::string(what) + " must be a JSON object");
}

void check_type(const Json& j, const char* type) {
  if (j.contains("schema") && j["schema"] != kScheduleSchema) {
    throw Error(ErrorCode::Format, "unsupported schedule schema " + j["schema"].dump());
  }
  if (j.contains("type") && j["type"] != type) {
    throw Error(ErrorCode::Format, std::string("expected a ") + type + " schedule, got " + j["type"].dump());
  }
}

}  // namespace

double json_number(const Json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::Format, std::string("missing field '") + key + "'");
  const Json& v = j[key];
  if (!v.is_number()) throw Error(ErrorCode::Format, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

double json_number(const Json& j, const char* key, double fallback) {
  return j.contains(key) ? json_number(j, key) : fallback;
}

Json to_json(const Trajectory& t) {
  if (t.kind() == Trajectory::Kind::Daylight) return Json{{"kind", "daylight"}};
  return Json{{"kind", "linear"}, {"phi", t.angle()}};
}

Trajectory trajectory_from_json(const Json& j) {
  expect_object(j, "trajectory");
  if (!j.contains("kind") || !j["kind"].is_string()) throw Error(ErrorCode::Format, "trajectory needs a 'kind'");
  const auto kind = j["kind"].get<std::string>();
  if (kind == "daylight") return Trajectory::daylight();
  if (kind == "linear") return Trajectory::linear(json_number(j, "phi"));
  throw Error(ErrorCode::Format, "unknown trajectory kind '" + kind + "'");
}

Json to_json(const TriphasicSchedule& s) {
  return Json{{"schema", kScheduleSchema}, {"type", "triphasic"}, {"trajectory", to_json(s.trajectory)},
              {"v", s.v}, {"D", s.D}, {"t1", s.t1}, {"t2", s.t2}};
}

TriphasicSchedule triphasic_from_json(const Json& j) {
  expect_object(j, "schedule");
  check_type(j, "triphasic");
  TriphasicSchedule s;
  if (j.contains("trajectory")) s.trajectory = trajectory_from_json(j["trajectory"]);
  s.v = json_number(j, "v", s.v);
  s.D = json_number(j, "D", s.D);
  s.t1 = json_number(j, "t1", s.t1);
  s.t2 = json_number(j, "t2", s.t2);
  s.validate();
  return s;
}

Json to_json(const DeploymentSchedule& s) {
  return Json{{"schema", kScheduleSchema}, {"type", "deployment"}, {"trajectory", to_json(s.trajectory)},
              {"v", s.v}, {"t_max", s.t_max}};
}

DeploymentSchedule deployment_from_json(const Json& j) {
  expect_object(j, "schedule");
  check_type(j, "deployment");
  DeploymentSchedule s;
  if (j.contains("trajectory")) s.trajectory = trajectory_from_json(j["trajectory"]);
  s.v = json_number(j, "v");
  s.t_max = json_number(j, "t_max", s.t_max);
  s.validate();
  return s;
}

Json to_json(const AdaptationParams& p) { return Json{{"k1", p.k1}, {"k2", p.k2}}; }

AdaptationParams adaptation_params_from_json(const Json& j) {
  expect_object(j, "adaptation params");
  AdaptationParams p{json_number(j, "k1"), json_number(j, "k2")};
  p.validate();
  return p;
}

Json to_json(const DisplayPowerParams& p) {
  return Json{{"per_channel", {p.per_channel[0], p.per_channel[1], p.per_channel[2]}}, {"static", p.static_power}};
}

DisplayPowerParams display_params_from_json(const Json& j) {
  expect_object(j, "display power params");
  DisplayPowerParams p;
  if (j.contains("per_channel")) {
    const Json& c = j["per_channel"];
    if (!c.is_array() || c.size() != 3) throw Error(ErrorCode::Format, "'per_channel' must be an array of 3 numbers");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!c[i].is_number()) throw Error(ErrorCode::Format, "'per_channel' must be an array of 3 numbers");
      p.per_channel[i] = c[i].get<double>();
    }
  }
  p.static_power = json_number(j, "static", p.static_power);
  p.validate();
  return p;
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::Format, what + ": " + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str(), path.string());
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace chroma
