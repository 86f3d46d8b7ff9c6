#include <random>
#include <sstream>

#include "support.hpp"

#include "chroma/records_io.hpp"

using namespace chroma;

namespace {

RecordSet random_set(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.05, 0.05), t(0.0, 300.0);
  auto choice = [&] { return rng() % 2 ? Choice::Further : Choice::Lagging; };
  auto uv = [&] { return ChromaticityUV{0.19784 + u(rng), 0.46834 + u(rng)}; };
  RecordSet s;
  s.psychometric = PsychometricParams{400.0 + u(rng), u(rng)};
  for (int i = 0; i < 20; ++i) s.calibration.push_back({u(rng), choice(), t(rng) / 100.0, rng() % 5 == 0});
  for (int r = 0; r < 3; ++r) {
    MeasurementRun run;
    run.schedule.trajectory = r == 2 ? Trajectory::daylight() : Trajectory::linear(1.0 + r);
    run.schedule.v = 1e-4 * (r + 1);
    run.schedule.D = jnd(r + 1);
    for (int i = 0; i < 10; ++i) run.trials.push_back({t(rng), uv(), uv(), uv(), choice(), t(rng) / 100.0, rng() % 7 == 0});
    s.runs.push_back(run);
  }
  s.sdt = {{"ramp", true, true}, {"ramp", false, true}, {"step", true, false}};
  return s;
}

void check_same(const RecordSet& a, const RecordSet& b) {
  REQUIRE(b.psychometric.has_value());
  CHECK(*a.psychometric == *b.psychometric);
  CHECK(a.calibration == b.calibration);
  REQUIRE(a.runs.size() == b.runs.size());
  for (std::size_t r = 0; r < a.runs.size(); ++r) {
    CHECK(a.runs[r].trials == b.runs[r].trials);
    CHECK(to_json(a.runs[r].schedule) == to_json(b.runs[r].schedule));
  }
  REQUIRE(a.sdt.size() == b.sdt.size());
  for (std::size_t i = 0; i < a.sdt.size(); ++i) {
    CHECK(a.sdt[i].condition == b.sdt[i].condition);
    CHECK(a.sdt[i].signal == b.sdt[i].signal);
    CHECK(a.sdt[i].response == b.sdt[i].response);
  }
}

}  // namespace

TEST_CASE("record sets round-trip exactly") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RecordSet a = random_set(seed);
    std::stringstream ss;
    write_records(ss, a);
    check_same(a, read_records(ss));
  }
  test::TempDir dir("rec");
  const RecordSet a = random_set(9);
  write_records(dir / "r.jsonl", a);
  check_same(a, read_records(dir / "r.jsonl"));
  CHECK_ERROR_CODE(read_records(dir / "missing.jsonl"), ErrorCode::Io);
}

TEST_CASE("loose trials and blank lines") {
  std::istringstream in(
      "\n"
      R"({"type":"trial","t":1.5,"further":[0.2,0.47],"lagging":[0.19,0.46],"midpoint":[0.195,0.465],"choice":"lagging","latency":0.8})"
      "\n  \n");
  const RecordSet s = read_records(in);
  REQUIRE(s.loose_trials.size() == 1);
  CHECK(s.loose_trials[0].t == 1.5);
  CHECK(s.loose_trials[0].choice == Choice::Lagging);
  CHECK_FALSE(s.loose_trials[0].late);
  CHECK(s.runs.empty());
}

TEST_CASE("malformed records name the line") {
  const auto fails = [](const std::string& text, const std::string& needle) {
    std::istringstream in(text);
    try {
      read_records(in, "f");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Format);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
      return;
    }
    FAIL("no error for " << text);
  };
  fails("{\"type\":\"header\",\"schema\":\"other/2\"}\n", "f:1");
  fails("{\"type\":\"header\",\"schema\":\"chroma.records/1\"}\nnot json\n", "f:2");
  fails("{\"type\":\"nope\"}\n", "unknown record type");
  fails("{\"type\":\"calibration\",\"m_offset\":0.1,\"choice\":\"sideways\"}\n", "f:1");
  fails("{\"type\":\"calibration\",\"choice\":\"further\"}\n", "m_offset");
  fails("{\"type\":\"run\",\"run\":1,\"schedule\":{}}\n", "consecutively");
  fails("{\"type\":\"run\",\"run\":0,\"schedule\":{}}\n"
        R"({"type":"trial","run":3,"t":1,"further":[0,0],"lagging":[0,0],"midpoint":[0,0],"choice":"further","latency":1})",
        "unknown run");
  fails(R"({"type":"trial","t":1,"further":[0],"lagging":[0,0],"midpoint":[0,0],"choice":"further","latency":1})",
        "[u, v]");
  fails("{\"type\":\"sdt\",\"signal\":true}\n", "condition");
  fails("[1,2]\n", "type");
}

TEST_CASE("schedule documents") {
  TriphasicSchedule s;
  s.trajectory = Trajectory::linear(2.256);
  s.v = 3e-4;
  s.D = jnd(4);
  s.t1 = 30.0;
  s.t2 = 45.0;
  const TriphasicSchedule back = triphasic_from_json(to_json(s));
  CHECK(back.trajectory.angle() == 2.256);
  CHECK(back.v == s.v);
  CHECK(back.D == s.D);
  CHECK(back.t1 == 30.0);
  CHECK(back.t2 == 45.0);
  CHECK(triphasic_from_json(to_json(TriphasicSchedule{Trajectory::daylight()})).trajectory.kind() ==
        Trajectory::Kind::Daylight);

  const DeploymentSchedule d{Trajectory::linear(1.47), 4.5e-4, 120.0};
  const DeploymentSchedule dback = deployment_from_json(to_json(d));
  CHECK(dback.v == d.v);
  CHECK(dback.t_max == d.t_max);
  CHECK_ERROR_CODE(deployment_from_json(to_json(s)), ErrorCode::Format);
  CHECK_ERROR_CODE(triphasic_from_json(to_json(d)), ErrorCode::Format);
  CHECK_ERROR_CODE(triphasic_from_json(Json{{"schema", "chroma.schedule/9"}}), ErrorCode::Format);
  CHECK_ERROR_CODE(triphasic_from_json(Json{{"trajectory", {{"kind", "spiral"}}}}), ErrorCode::Format);
  CHECK_ERROR_CODE(triphasic_from_json(Json{{"v", "fast"}}), ErrorCode::Format);
  CHECK_ERROR_CODE(triphasic_from_json(Json::array()), ErrorCode::Format);

  const AdaptationParams p = adaptation_params_from_json(to_json(AdaptationParams{0.107, 0.638}));
  CHECK(p.k1 == 0.107);
  CHECK(p.k2 == 0.638);
  CHECK_ERROR_CODE(adaptation_params_from_json(Json{{"k1", 0.1}}), ErrorCode::Format);

  const DisplayPowerParams dp = display_params_from_json(to_json(DisplayPowerParams{{1.0, 1.5, 2.5}, 0.3}));
  CHECK(dp.per_channel[1] == 1.5);
  CHECK(dp.static_power == 0.3);
  CHECK_ERROR_CODE(display_params_from_json(Json{{"per_channel", {1, 2}}}), ErrorCode::Format);
}

TEST_CASE("json files") {
  test::TempDir dir("json");
  const Json j{{"a", 1.25}, {"b", {1, 2, 3}}};
  write_json_file(dir / "x.json", j);
  CHECK(read_json_file(dir / "x.json") == j);
  write_json_file(dir / "x.json", Json{{"a", 2}});
  CHECK(read_json_file(dir / "x.json")["a"] == 2);
  CHECK_ERROR_CODE(read_json_file(dir / "none.json"), ErrorCode::Io);
  CHECK_ERROR_CODE(parse_json("{oops"), ErrorCode::Format);
  CHECK(json_number(j, "a") == 1.25);
  CHECK(json_number(j, "z", 7.0) == 7.0);
  CHECK_ERROR_CODE(json_number(j, "b"), ErrorCode::Format);
}
