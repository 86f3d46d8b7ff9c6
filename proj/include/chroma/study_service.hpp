#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "chroma/psychophysics.hpp"
#include "chroma/records_io.hpp"

namespace chroma {

/// Seconds on a monotone clock. The default is wall time so that persisted
/// timestamps stay meaningful across restarts.
using Clock = std::function<double()>;
double wall_clock_seconds();

struct SessionConfig {
  std::vector<TriphasicSchedule> runs{TriphasicSchedule{}};
  double warmup = 60.0;            // s at D65 before calibration
  int calibration_trials = 70;
  double calibration_sigma = jnd(3);
  PlacementOptions placement;
  double display_duration = 0.75;  // s
  double response_window = 3.0;    // s
  double rest = 180.0;             // s between measurement runs
  double gap_limit = 30.0;         // s of silence that flags a measurement run
  double background_luminance = 0.2;
  std::uint64_t seed = 1;
  AdaptationParams prior{0.1, 0.69};     // prediction before any measurement data
  PsychometricParams psychometric;       // used when calibration cannot be fitted
  FitGrid grid;
  Json patch_geometry = Json::object();  // presentation hints passed to the client

  void validate() const;
};

Json to_json(const SessionConfig& c);
/// Missing fields take their defaults. Throws Error(Format/InvalidArgument).
SessionConfig session_config_from_json(const Json& j);

enum class Phase { WarmUp, Calibration, Measurement, Done };
std::string to_string(Phase p);

struct TrialSpec {
  std::uint64_t id = 0;
  Phase phase = Phase::Calibration;
  std::size_t run = 0;  // measurement attempt
  double t = 0.0;       // s since the run started (0 in calibration)
  double issued_at = 0.0;
  double display_duration = 0.75;
  double response_window = 3.0;
  ChromaticityUV background;
  ChromaticityUV further;
  ChromaticityUV lagging;
  ChromaticityUV midpoint;
  double m_offset = 0.0;  // midpoint offset from D65 along the run direction
  Rgb8 background_rgb{};
  Rgb8 further_rgb{};
  Rgb8 lagging_rgb{};
  bool further_on_left = false;
  bool clamped = false;
  std::uint64_t noise_seed = 0;
};

Json to_json(const TrialSpec& t);

struct NextTrial {
  std::optional<TrialSpec> trial;
  Phase phase = Phase::WarmUp;
  std::string notice;  // "warmup", "measurement", "rest", "done" when no trial
  double wait = 0.0;   // s until the next trial can be issued
  ChromaticityUV background;
};

Json to_json(const NextTrial& n);

struct ResponseAck {
  std::uint64_t trial_id = 0;
  bool late = false;
  Phase phase = Phase::WarmUp;
  std::optional<PsychometricParams> psychometric;
  std::optional<AdaptationParams> estimate;
};

Json to_json(const ResponseAck& a);

struct SessionFlags {
  bool gap = false;  // a measurement run saw more than gap_limit s of silence
  std::size_t late_responses = 0;
  std::size_t resets = 0;
  std::size_t clamped_stimuli = 0;
  bool finalized = false;  // ended before its schedule completed
};

struct SessionResults {
  Phase phase = Phase::WarmUp;
  PsychometricFit psychometric;
  bool psychometric_fitted = false;
  FitResult fit;
  SessionFlags flags;
  RecordSet records;
};

Json to_json(const SessionResults& r);

struct SessionStatus {
  std::string id;
  Phase phase = Phase::WarmUp;
  std::optional<TrialSpec> pending;
  std::size_t calibration_count = 0;
  std::size_t measurement_count = 0;
  std::size_t run = 0;
  std::optional<AdaptationParams> estimate;
  SessionFlags flags;
};

class Session;

/// Runs adaptive 2AFC sessions. Every state change is appended to the
/// session's event log (fsync'd) before the call returns, and sessions found
/// under the data directory are rebuilt by replaying their logs.
class StudyService {
 public:
  struct Options {
    std::filesystem::path data_dir;  // empty: in-memory only
    Clock clock;                     // empty: wall_clock_seconds
  };

  explicit StudyService(Options options);
  ~StudyService();
  StudyService(const StudyService&) = delete;
  StudyService& operator=(const StudyService&) = delete;

  std::string create_session(const SessionConfig& config);
  NextTrial next_trial(const std::string& id);
  ResponseAck submit_response(const std::string& id, std::uint64_t trial_id, Choice choice, double latency);
  /// Throws Error(Conflict) unless the session is Done or `finalize` is set.
  SessionResults results(const std::string& id, bool finalize = false);
  void reset(const std::string& id);
  RecordSet export_records(const std::string& id);
  SessionStatus status(const std::string& id);
  std::vector<std::string> session_ids() const;

 private:
  struct Slot;
  Slot& slot(const std::string& id);
  double now() const;

  Options options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<Slot>> sessions_;
};

}  // namespace chroma
