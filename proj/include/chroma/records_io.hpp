#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "chroma/psychophysics.hpp"
#include "chroma/schedule_json.hpp"

namespace chroma {

inline constexpr const char* kRecordsSchema = "chroma.records/1";

/// Contents of a JSON-lines record file. Each line is an object with a
/// "type" field:
///   header       {"schema": "chroma.records/1"}
///   psychometric {"k", "x0"}
///   calibration  {"m_offset", "choice", "latency", "late"}
///   run          {"run", "schedule"}             starts a measurement run
///   trial        {"run", "t", "further", "lagging", "midpoint", "choice", "latency", "late"}
///   sdt          {"condition", "signal", "response"}
/// Chromaticities are [u, v] arrays.
struct RecordSet {
  std::optional<PsychometricParams> psychometric;
  std::vector<CalibrationRecord> calibration;
  std::vector<MeasurementRun> runs;
  std::vector<SdtRecord> sdt;
  /// Trials that appeared before any run line (no schedule attached).
  std::vector<TrialRecord> loose_trials;
};

Json to_json(const PsychometricParams& p);
Json to_json(const CalibrationRecord& r);
Json to_json(const TrialRecord& r, std::size_t run);
Json to_json(const SdtRecord& r);
Json run_line(std::size_t run, const TriphasicSchedule& s);
Json header_line();

void write_records(std::ostream& out, const RecordSet& records);
void write_records(const std::filesystem::path& path, const RecordSet& records);

RecordSet read_records(std::istream& in, const std::string& name = "records");
RecordSet read_records(const std::filesystem::path& path);

/// Applies one parsed line to a record set (used when replaying logs).
void apply_record_line(RecordSet& set, const Json& line);

}  // namespace chroma

namespace chroma {

Json to_json(const FitResult& f);
Json to_json(const PsychometricFit& f);

}  // namespace chroma
