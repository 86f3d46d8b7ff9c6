#include "chroma/records_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace chroma {

namespace {

Json uv_json(const ChromaticityUV& c) { return Json::array({c.u, c.v}); }

ChromaticityUV uv_from(const Json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::Format, std::string("missing field '") + key + "'");
  const Json& a = j[key];
  if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
    throw Error(ErrorCode::Format, std::string("field '") + key + "' must be [u, v]");
  }
  return {a[0].get<double>(), a[1].get<double>()};
}

bool bool_or(const Json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) throw Error(ErrorCode::Format, std::string("field '") + key + "' must be a boolean");
  return j[key].get<bool>();
}

Choice choice_from(const Json& j) {
  if (!j.contains("choice") || !j["choice"].is_string()) throw Error(ErrorCode::Format, "missing 'choice'");
  try {
    return parse_choice(j["choice"].get<std::string>());
  } catch (const Error& e) {
    throw Error(ErrorCode::Format, e.what());
  }
}

std::size_t run_index(const Json& j) {
  if (!j.contains("run")) return 0;
  if (!j["run"].is_number_unsigned()) throw Error(ErrorCode::Format, "'run' must be a non-negative integer");
  return j["run"].get<std::size_t>();
}

}  // namespace

Json to_json(const PsychometricParams& p) { return Json{{"type", "psychometric"}, {"k", p.k}, {"x0", p.x0}}; }

Json to_json(const CalibrationRecord& r) {
  return Json{{"type", "calibration"}, {"m_offset", r.m_offset}, {"choice", to_string(r.choice)},
              {"latency", r.latency}, {"late", r.late}};
}

Json to_json(const TrialRecord& r, std::size_t run) {
  return Json{{"type", "trial"}, {"run", run}, {"t", r.t}, {"further", uv_json(r.further)},
              {"lagging", uv_json(r.lagging)}, {"midpoint", uv_json(r.midpoint)}, {"choice", to_string(r.choice)},
              {"latency", r.latency}, {"late", r.late}};
}

Json to_json(const SdtRecord& r) {
  return Json{{"type", "sdt"}, {"condition", r.condition}, {"signal", r.signal}, {"response", r.response}};
}

Json run_line(std::size_t run, const TriphasicSchedule& s) {
  return Json{{"type", "run"}, {"run", run}, {"schedule", to_json(s)}};
}

Json header_line() { return Json{{"type", "header"}, {"schema", kRecordsSchema}}; }

void write_records(std::ostream& out, const RecordSet& records) {
  out << header_line().dump() << '\n';
  if (records.psychometric) out << to_json(*records.psychometric).dump() << '\n';
  for (const auto& c : records.calibration) out << to_json(c).dump() << '\n';
  for (std::size_t r = 0; r < records.runs.size(); ++r) {
    out << run_line(r, records.runs[r].schedule).dump() << '\n';
    for (const auto& t : records.runs[r].trials) out << to_json(t, r).dump() << '\n';
  }
  for (const auto& s : records.sdt) out << to_json(s).dump() << '\n';
}

void write_records(const std::filesystem::path& path, const RecordSet& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_records(out, records);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

void apply_record_line(RecordSet& set, const Json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw Error(ErrorCode::Format, "record line needs a string 'type'");
  }
  const auto type = j["type"].get<std::string>();
  if (type == "header") {
    if (!j.contains("schema") || j["schema"] != kRecordsSchema) {
      throw Error(ErrorCode::Format, "unsupported records schema");
    }
  } else if (type == "psychometric") {
    set.psychometric = PsychometricParams{json_number(j, "k"), json_number(j, "x0")};
  } else if (type == "calibration") {
    set.calibration.push_back({json_number(j, "m_offset"), choice_from(j), json_number(j, "latency", 0.0),
                               bool_or(j, "late", false)});
  } else if (type == "run") {
    const std::size_t run = run_index(j);
    if (run != set.runs.size()) throw Error(ErrorCode::Format, "runs must be numbered consecutively from 0");
    if (!j.contains("schedule")) throw Error(ErrorCode::Format, "run line needs a 'schedule'");
    set.runs.push_back({triphasic_from_json(j["schedule"]), {}});
  } else if (type == "trial") {
    TrialRecord r;
    r.t = json_number(j, "t");
    r.further = uv_from(j, "further");
    r.lagging = uv_from(j, "lagging");
    r.midpoint = j.contains("midpoint") ? uv_from(j, "midpoint") : 0.5 * (r.further + r.lagging);
    r.choice = choice_from(j);
    r.latency = json_number(j, "latency", 0.0);
    r.late = bool_or(j, "late", false);
    if (set.runs.empty()) {
      set.loose_trials.push_back(r);
    } else {
      const std::size_t run = j.contains("run") ? run_index(j) : set.runs.size() - 1;
      if (run >= set.runs.size()) throw Error(ErrorCode::Format, "trial refers to an unknown run");
      set.runs[run].trials.push_back(r);
    }
  } else if (type == "sdt") {
    if (!j.contains("condition") || !j["condition"].is_string()) {
      throw Error(ErrorCode::Format, "sdt line needs a string 'condition'");
    }
    set.sdt.push_back({j["condition"].get<std::string>(), bool_or(j, "signal", false), bool_or(j, "response", false)});
  } else {
    throw Error(ErrorCode::Format, "unknown record type '" + type + "'");
  }
}

RecordSet read_records(std::istream& in, const std::string& name) {
  RecordSet set;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      apply_record_line(set, parse_json(line, "line"));
    } catch (const Error& e) {
      throw Error(e.code(), name + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return set;
}

RecordSet read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_records(in, path.string());
}

}  // namespace chroma

namespace chroma {

Json to_json(const FitResult& f) {
  Json j{{"k1", f.params.k1},
         {"k2", f.params.k2},
         {"k1_index", f.k1_index},
         {"k2_index", f.k2_index},
         {"log_likelihood", f.log_likelihood},
         {"trial_count", f.trial_count},
         {"flags",
          {{"no_fit", f.no_fit},
           {"flat", f.flat},
           {"ci_k1_censored", f.ci_k1_censored},
           {"ci_k2_censored", f.ci_k2_censored},
           {"clamped_terms", f.clamped}}}};
  if (f.has_ci || f.no_fit) {
    j["ci_k1"] = Json::array({f.ci_k1.lo, f.ci_k1.hi});
    j["ci_k2"] = Json::array({f.ci_k2.lo, f.ci_k2.hi});
  }
  return j;
}

Json to_json(const PsychometricFit& f) {
  return Json{{"k", f.params.k},
              {"x0", f.params.x0},
              {"log_likelihood", f.log_likelihood},
              {"separable", f.separable},
              {"converged", f.converged},
              {"iterations", f.iterations}};
}

}  // namespace chroma
