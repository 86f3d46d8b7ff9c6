#include "chroma/study_service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace chroma {
namespace fs = std::filesystem;

double wall_clock_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

void SessionConfig::validate() const {
  if (runs.empty()) throw Error(ErrorCode::InvalidArgument, "session needs at least one measurement run");
  for (const auto& r : runs) r.validate();
  auto non_negative = [](double x, const char* what) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be >= 0");
  };
  non_negative(warmup, "warmup");
  non_negative(rest, "rest");
  non_negative(gap_limit, "gap_limit");
  non_negative(display_duration, "display_duration");
  non_negative(response_window, "response_window");
  if (calibration_trials < 0) throw Error(ErrorCode::InvalidArgument, "calibration_trials must be >= 0");
  if (!(calibration_sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "calibration_sigma must be positive");
  if (!(placement.sigma >= 0.0) || !(placement.separation > 0.0) || !(placement.luminance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid stimulus placement options");
  }
  if (!(background_luminance > 0.0)) throw Error(ErrorCode::InvalidArgument, "background_luminance must be positive");
  prior.validate();
  grid.validate();
}

Json to_json(const SessionConfig& c) {
  Json runs = Json::array();
  for (const auto& r : c.runs) runs.push_back(to_json(r));
  return Json{{"runs", runs},
              {"warmup", c.warmup},
              {"calibration_trials", c.calibration_trials},
              {"calibration_sigma", c.calibration_sigma},
              {"placement",
               {{"sigma", c.placement.sigma},
                {"separation", c.placement.separation},
                {"luminance", c.placement.luminance},
                {"max_resamples", c.placement.max_resamples}}},
              {"display_duration", c.display_duration},
              {"response_window", c.response_window},
              {"rest", c.rest},
              {"gap_limit", c.gap_limit},
              {"background_luminance", c.background_luminance},
              {"seed", c.seed},
              {"prior", to_json(c.prior)},
              {"psychometric", {{"k", c.psychometric.k}, {"x0", c.psychometric.x0}}},
              {"grid",
               {{"k1_step", c.grid.k1_step},
                {"k1_count", c.grid.k1_count},
                {"k2_step", c.grid.k2_step},
                {"k2_count", c.grid.k2_count}}},
              {"patch_geometry", c.patch_geometry}};
}

SessionConfig session_config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Format, "session config must be a JSON object");
  SessionConfig c;
  try {
    if (j.contains("runs")) {
      if (!j["runs"].is_array()) throw Error(ErrorCode::Format, "'runs' must be an array of schedules");
      c.runs.clear();
      for (const auto& r : j["runs"]) c.runs.push_back(triphasic_from_json(r));
    } else if (j.contains("schedule")) {
      c.runs = {triphasic_from_json(j["schedule"])};
    }
    c.warmup = json_number(j, "warmup", c.warmup);
    c.calibration_trials = static_cast<int>(json_number(j, "calibration_trials", c.calibration_trials));
    c.calibration_sigma = json_number(j, "calibration_sigma", c.calibration_sigma);
    if (j.contains("placement")) {
      const Json& p = j["placement"];
      c.placement.sigma = json_number(p, "sigma", c.placement.sigma);
      c.placement.separation = json_number(p, "separation", c.placement.separation);
      c.placement.luminance = json_number(p, "luminance", c.placement.luminance);
      c.placement.max_resamples = static_cast<int>(json_number(p, "max_resamples", c.placement.max_resamples));
    }
    c.display_duration = json_number(j, "display_duration", c.display_duration);
    c.response_window = json_number(j, "response_window", c.response_window);
    c.rest = json_number(j, "rest", c.rest);
    c.gap_limit = json_number(j, "gap_limit", c.gap_limit);
    c.background_luminance = json_number(j, "background_luminance", c.background_luminance);
    if (j.contains("seed")) {
      if (!j["seed"].is_number_unsigned()) throw Error(ErrorCode::Format, "'seed' must be a non-negative integer");
      c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("prior")) c.prior = adaptation_params_from_json(j["prior"]);
    if (j.contains("psychometric")) {
      c.psychometric = {json_number(j["psychometric"], "k"), json_number(j["psychometric"], "x0")};
    }
    if (j.contains("grid")) {
      const Json& g = j["grid"];
      c.grid.k1_step = json_number(g, "k1_step", c.grid.k1_step);
      c.grid.k1_count = static_cast<int>(json_number(g, "k1_count", c.grid.k1_count));
      c.grid.k2_step = json_number(g, "k2_step", c.grid.k2_step);
      c.grid.k2_count = static_cast<int>(json_number(g, "k2_count", c.grid.k2_count));
    }
    if (j.contains("patch_geometry")) c.patch_geometry = j["patch_geometry"];
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Format, std::string("session config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::WarmUp: return "warmup";
    case Phase::Calibration: return "calibration";
    case Phase::Measurement: return "measurement";
    case Phase::Done: return "done";
  }
  return "done";
}

namespace {

Json uv_json(const ChromaticityUV& c) { return Json::array({c.u, c.v}); }
Json rgb_json(const Rgb8& c) { return Json::array({c[0], c[1], c[2]}); }

Rgb8 display_color(const ChromaticityUV& c, double luminance) {
  return srgb_encode(xyz_rgb(uv_xyz(c, luminance)));
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t counter) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

Json to_json(const TrialSpec& t) {
  return Json{{"id", t.id},
              {"phase", to_string(t.phase)},
              {"run", t.run},
              {"t", t.t},
              {"issued_at", t.issued_at},
              {"display_duration", t.display_duration},
              {"response_window", t.response_window},
              {"background", uv_json(t.background)},
              {"further", uv_json(t.further)},
              {"lagging", uv_json(t.lagging)},
              {"midpoint", uv_json(t.midpoint)},
              {"m_offset", t.m_offset},
              {"background_rgb", rgb_json(t.background_rgb)},
              {"further_rgb", rgb_json(t.further_rgb)},
              {"lagging_rgb", rgb_json(t.lagging_rgb)},
              {"further_on_left", t.further_on_left},
              {"clamped", t.clamped},
              {"noise_seed", t.noise_seed}};
}

Json to_json(const NextTrial& n) {
  if (n.trial) return Json{{"status", "trial"}, {"phase", to_string(n.phase)}, {"trial", to_json(*n.trial)}};
  return Json{{"status", "notice"},
              {"phase", to_string(n.phase)},
              {"notice", n.notice},
              {"wait", n.wait},
              {"background", uv_json(n.background)}};
}

Json to_json(const ResponseAck& a) {
  Json j{{"ack", true}, {"trial_id", a.trial_id}, {"late", a.late}, {"phase", to_string(a.phase)}};
  if (a.psychometric) j["psychometric"] = {{"k", a.psychometric->k}, {"x0", a.psychometric->x0}};
  if (a.estimate) j["estimate"] = to_json(*a.estimate);
  return j;
}

Json to_json(const SessionResults& r) {
  std::ostringstream records;
  write_records(records, r.records);
  Json psy = to_json(r.psychometric);
  psy["fitted"] = r.psychometric_fitted;
  return Json{{"phase", to_string(r.phase)},
              {"psychometric", psy},
              {"fit", to_json(r.fit)},
              {"flags",
               {{"gap", r.flags.gap},
                {"late_responses", r.flags.late_responses},
                {"resets", r.flags.resets},
                {"clamped_stimuli", r.flags.clamped_stimuli},
                {"finalized", r.flags.finalized}}},
              {"records", records.str()}};
}

// Deterministic session state machine. Every mutation is driven by an
// operation carrying its server timestamp, so replaying the logged
// operations reproduces the state exactly.
class Session {
 public:
  Session(std::string id, SessionConfig config, double created_at)
      : id_(std::move(id)), config_(std::move(config)), last_at_(created_at), warmup_start_(created_at) {
    if (config_.warmup <= 0.0) phase_ = Phase::Calibration;
  }

  const std::string& id() const { return id_; }
  const SessionConfig& config() const { return config_; }
  std::uint64_t version() const { return version_; }
  Phase phase() const { return phase_; }
  double last_at() const { return last_at_; }

  NextTrial next(double at) {
    at = stamp(at);
    NextTrial out;
    if (pending_ && phase_ != Phase::Done) {
      out.trial = pending_;
      out.phase = phase_;
      out.background = pending_->background;
      return out;
    }
    for (;;) {
      switch (phase_) {
        case Phase::WarmUp: {
          const double remaining = config_.warmup - (at - warmup_start_);
          if (remaining > 0.0) return notice("warmup", remaining);
          if (calibration_.size() < static_cast<std::size_t>(config_.calibration_trials)) {
            set_phase(Phase::Calibration);
            continue;
          }
          set_phase(Phase::Measurement);
          start_attempt(at);
          return notice("measurement", 0.0);
        }
        case Phase::Calibration:
          if (calibration_.size() < static_cast<std::size_t>(config_.calibration_trials)) {
            return issue_calibration(at);
          }
          set_phase(Phase::Measurement);
          start_attempt(at);
          return notice("measurement", 0.0);
        case Phase::Measurement: {
          if (rest_until_) {
            if (at < *rest_until_) return notice("rest", *rest_until_ - at);
            rest_until_.reset();
            start_attempt(at);
          }
          Attempt& a = attempts_[*current_];
          const TriphasicSchedule& s = config_.runs[a.schedule_index];
          const double t = at - a.start;
          if (t > s.duration()) {
            current_.reset();
            ++version_;
            if (next_schedule_ < config_.runs.size()) {
              if (config_.rest > 0.0) {
                rest_until_ = at + config_.rest;
                return notice("rest", config_.rest);
              }
              start_attempt(at);
              continue;
            }
            set_phase(Phase::Done);
            return notice("done", 0.0);
          }
          if (at - last_activity_ > config_.gap_limit) flags_.gap = true;
          return issue_measurement(at, t);
        }
        case Phase::Done:
          return notice("done", 0.0);
      }
    }
  }

  ResponseAck respond(double at, std::uint64_t trial_id, Choice choice, double latency) {
    if (!pending_ || pending_->id != trial_id) {
      throw Error(ErrorCode::NotFound, "no pending trial with id " + std::to_string(trial_id));
    }
    if (!(latency >= 0.0) || !std::isfinite(latency)) {
      throw Error(ErrorCode::InvalidArgument, "latency must be a non-negative number of seconds");
    }
    at = stamp(at);
    const TrialSpec spec = *pending_;
    pending_.reset();
    ++version_;
    const bool late = latency > config_.response_window ||
                      at - spec.issued_at > config_.display_duration + config_.response_window;
    if (late) ++flags_.late_responses;

    ResponseAck ack;
    ack.trial_id = trial_id;
    ack.late = late;
    if (spec.phase == Phase::Calibration) {
      calibration_.push_back({spec.m_offset, choice, latency, late});
      refresh_psychometric();
    } else {
      TrialRecord r;
      r.t = spec.t;
      r.further = spec.further;
      r.lagging = spec.lagging;
      r.midpoint = spec.midpoint;
      r.choice = choice;
      r.latency = latency;
      r.late = late;
      attempts_[spec.run].run.trials.push_back(r);
      last_activity_ = at;
      refresh_estimate();
    }
    ack.phase = phase_;
    if (calibration_.size() >= 2) ack.psychometric = psychometric();
    if (estimate_) ack.estimate = estimate_->params;
    return ack;
  }

  void reset(double at) {
    if (phase_ == Phase::Done) throw Error(ErrorCode::Conflict, "session is already complete");
    at = stamp(at);
    if (current_) {
      attempts_[*current_].aborted = true;
      next_schedule_ = attempts_[*current_].schedule_index;
      current_.reset();
    }
    rest_until_.reset();
    pending_.reset();
    phase_ = Phase::WarmUp;
    warmup_start_ = at;
    ++flags_.resets;
    ++version_;
    if (config_.warmup <= 0.0) phase_ = Phase::Calibration;
  }

  void finalize(double at) {
    if (phase_ == Phase::Done) return;
    stamp(at);
    pending_.reset();
    rest_until_.reset();
    current_.reset();
    flags_.finalized = true;
    set_phase(Phase::Done);
  }

  RecordSet records() const {
    RecordSet set;
    set.psychometric = psychometric();
    set.calibration = calibration_;
    set.runs = active_runs();
    return set;
  }

  SessionResults results() const {
    SessionResults r;
    r.phase = phase_;
    r.flags = flags_;
    r.records = records();
    if (psy_fit_) {
      r.psychometric = *psy_fit_;
      r.psychometric_fitted = true;
    } else {
      r.psychometric.params = config_.psychometric;
    }
    FitOptions opts;
    opts.grid = config_.grid;
    r.fit = fit_adaptation(r.records.runs, psychometric(), opts);
    return r;
  }

  SessionStatus status() const {
    SessionStatus s;
    s.id = id_;
    s.phase = phase_;
    s.pending = pending_;
    s.calibration_count = calibration_.size();
    for (const auto& run : active_runs()) s.measurement_count += run.trials.size();
    s.run = current_ ? *current_ : attempts_.size();
    if (estimate_) s.estimate = estimate_->params;
    s.flags = flags_;
    return s;
  }

 private:
  struct Attempt {
    std::size_t schedule_index = 0;
    double start = 0.0;
    MeasurementRun run;
    bool aborted = false;
  };

  double stamp(double at) {
    last_at_ = std::max(last_at_, at);
    return last_at_;
  }

  void set_phase(Phase p) {
    phase_ = p;
    ++version_;
  }

  NextTrial notice(const char* what, double wait) const {
    NextTrial n;
    n.phase = phase_;
    n.notice = what;
    n.wait = wait;
    n.background = d65_uv();
    return n;
  }

  void start_attempt(double at) {
    const std::size_t index = next_schedule_++;
    attempts_.push_back({index, at, {config_.runs[index], {}}, false});
    current_ = attempts_.size() - 1;
    last_activity_ = at;
    ++version_;
  }

  PsychometricParams psychometric() const { return psy_fit_ ? psy_fit_->params : config_.psychometric; }

  void refresh_psychometric() {
    if (calibration_.size() >= 2) psy_fit_ = fit_psychometric(calibration_);
  }

  std::vector<MeasurementRun> active_runs() const {
    std::vector<MeasurementRun> runs;
    for (const auto& a : attempts_) {
      if (!a.aborted) runs.push_back(a.run);
    }
    return runs;
  }

  void refresh_estimate() {
    FitOptions opts;
    opts.grid = config_.grid;
    opts.confidence_intervals = false;
    const int prior_index = static_cast<int>(std::lround(config_.prior.k1 / config_.grid.k1_step)) - 1;
    opts.warm_start_k1 = estimate_ ? estimate_->k1_index : prior_index;
    estimate_ = fit_adaptation(active_runs(), psychometric(), opts);
  }

  AdaptationParams prediction_params() const { return estimate_ ? estimate_->params : config_.prior; }

  TrialSpec new_spec(double at, Phase phase) {
    TrialSpec spec;
    spec.id = ++trial_counter_;
    spec.phase = phase;
    spec.issued_at = at;
    spec.display_duration = config_.display_duration;
    spec.response_window = config_.response_window;
    return spec;
  }

  NextTrial finish_issue(TrialSpec spec, const StimulusPair& pair, const ChromaticityUV& dir, std::mt19937_64& rng) {
    spec.further = pair.further;
    spec.lagging = pair.lagging;
    spec.midpoint = pair.midpoint;
    spec.clamped = pair.clamped;
    if (pair.clamped) ++flags_.clamped_stimuli;
    spec.m_offset = signed_offset(pair.midpoint, d65_uv(), dir);
    spec.background_rgb = display_color(spec.background, config_.background_luminance);
    spec.further_rgb = display_color(spec.further, config_.placement.luminance);
    spec.lagging_rgb = display_color(spec.lagging, config_.placement.luminance);
    spec.further_on_left = (rng() & 1u) != 0;
    spec.noise_seed = rng();
    pending_ = spec;
    ++version_;
    NextTrial out;
    out.trial = spec;
    out.phase = phase_;
    out.background = spec.background;
    return out;
  }

  NextTrial issue_calibration(double at) {
    TrialSpec spec = new_spec(at, Phase::Calibration);
    auto rng = trial_rng(config_.seed, spec.id);
    const ChromaticityUV dir = config_.runs.front().direction();
    PlacementOptions placement = config_.placement;
    placement.sigma = config_.calibration_sigma;
    const StimulusPair pair = place_stimuli(d65_uv(), dir, rng, placement);
    spec.background = d65_uv();
    return finish_issue(spec, pair, dir, rng);
  }

  NextTrial issue_measurement(double at, double t) {
    TrialSpec spec = new_spec(at, Phase::Measurement);
    auto rng = trial_rng(config_.seed, spec.id);
    const Attempt& a = attempts_[*current_];
    const TriphasicSchedule& s = config_.runs[a.schedule_index];
    const ChromaticityUV dir = s.direction();
    spec.run = *current_;
    spec.t = t;
    spec.background = illuminant_at(s, t);
    const StimulusPair pair = place_stimuli(adaptation_closed_form(s, prediction_params(), t), dir, rng,
                                            config_.placement);
    last_activity_ = at;
    return finish_issue(spec, pair, dir, rng);
  }

  std::string id_;
  SessionConfig config_;
  Phase phase_ = Phase::WarmUp;
  std::uint64_t version_ = 0;
  double last_at_ = 0.0;
  double warmup_start_ = 0.0;
  double last_activity_ = 0.0;
  std::vector<CalibrationRecord> calibration_;
  std::optional<PsychometricFit> psy_fit_;
  std::vector<Attempt> attempts_;
  std::optional<std::size_t> current_;
  std::size_t next_schedule_ = 0;
  std::optional<double> rest_until_;
  std::optional<TrialSpec> pending_;
  std::uint64_t trial_counter_ = 0;
  std::optional<FitResult> estimate_;
  SessionFlags flags_;
};

namespace {

// Append-only operation log; each line is flushed to stable storage before
// the append returns.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorCode::Io, "cannot open " + path.string());
  }
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;
  ~EventLog() {
    if (fd_ >= 0) ::close(fd_);
  }

  void append(const Json& event) {
    if (fd_ < 0) return;
    const std::string line = event.dump() + "\n";
    std::size_t done = 0;
    while (done < line.size()) {
      const ssize_t n = ::write(fd_, line.data() + done, line.size() - done);
      if (n < 0) throw Error(ErrorCode::Io, "cannot append to session log");
      done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw Error(ErrorCode::Io, "cannot sync session log");
  }

 private:
  int fd_ = -1;
};

void apply_op(Session& s, const Json& op) {
  const std::string kind = op.at("op").get<std::string>();
  const double at = op.at("at").get<double>();
  if (kind == "next") {
    s.next(at);
  } else if (kind == "respond") {
    s.respond(at, op.at("trial_id").get<std::uint64_t>(), parse_choice(op.at("choice").get<std::string>()),
              op.at("latency").get<double>());
  } else if (kind == "reset") {
    s.reset(at);
  } else if (kind == "finalize") {
    s.finalize(at);
  } else {
    throw Error(ErrorCode::Format, "unknown session operation '" + kind + "'");
  }
}

std::string new_session_id() {
  static std::mt19937_64 gen{std::random_device{}()};
  static std::mutex m;
  std::lock_guard lock(m);
  char buf[20];
  std::snprintf(buf, sizeof buf, "s%012llx", static_cast<unsigned long long>(gen() & 0xffffffffffffULL));
  return buf;
}

}  // namespace

struct StudyService::Slot {
  std::mutex mutex;
  std::unique_ptr<Session> session;
  std::unique_ptr<EventLog> log;

  template <typename Op>
  auto mutate(const Json& event, Op&& op) {
    Session next = *session;
    auto result = op(next);
    if (next.version() != session->version() || event.value("op", "") != "next") log->append(event);
    *session = std::move(next);
    return result;
  }
};

StudyService::StudyService(Options options) : options_(std::move(options)) {
  if (!options_.clock) options_.clock = wall_clock_seconds;
  if (options_.data_dir.empty()) return;
  std::error_code ec;
  fs::create_directories(options_.data_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + options_.data_dir.string() + ": " + ec.message());
  for (const auto& entry : fs::directory_iterator(options_.data_dir)) {
    const fs::path manifest = entry.path() / "manifest.json";
    if (!entry.is_directory() || !fs::exists(manifest)) continue;
    try {
      const Json m = read_json_file(manifest);
      auto session = std::make_unique<Session>(m.at("id").get<std::string>(), session_config_from_json(m.at("config")),
                                               m.at("created_at").get<double>());
      std::ifstream events(entry.path() / "events.jsonl");
      std::string line;
      while (std::getline(events, line)) {
        if (line.empty()) continue;
        Json op;
        try {
          op = Json::parse(line);
        } catch (const Json::parse_error&) {
          break;  // torn final line from an interrupted append
        }
        apply_op(*session, op);
      }
      auto slot = std::make_unique<Slot>();
      slot->session = std::move(session);
      slot->log = std::make_unique<EventLog>(entry.path() / "events.jsonl");
      sessions_.emplace(slot->session->id(), std::move(slot));
    } catch (const std::exception& e) {
      std::cerr << "warning: cannot resume session in " << entry.path() << ": " << e.what() << '\n';
    }
  }
}

StudyService::~StudyService() = default;

double StudyService::now() const { return options_.clock(); }

StudyService::Slot& StudyService::slot(const std::string& id) {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "unknown session '" + id + "'");
  return *it->second;
}

std::string StudyService::create_session(const SessionConfig& config) {
  config.validate();
  const double at = now();
  std::unique_lock lock(sessions_mutex_);
  std::string id;
  do {
    id = new_session_id();
  } while (sessions_.count(id));
  auto slot = std::make_unique<Slot>();
  slot->session = std::make_unique<Session>(id, config, at);
  if (options_.data_dir.empty()) {
    slot->log = std::make_unique<EventLog>();
  } else {
    const fs::path dir = options_.data_dir / id;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
    write_json_file(dir / "manifest.json",
                    Json{{"schema", "chroma.session/1"}, {"id", id}, {"created_at", at}, {"config", to_json(config)}});
    slot->log = std::make_unique<EventLog>(dir / "events.jsonl");
  }
  sessions_.emplace(id, std::move(slot));
  return id;
}

NextTrial StudyService::next_trial(const std::string& id) {
  Slot& s = slot(id);
  std::lock_guard lock(s.mutex);
  const double at = now();
  return s.mutate(Json{{"op", "next"}, {"at", at}}, [&](Session& session) { return session.next(at); });
}

ResponseAck StudyService::submit_response(const std::string& id, std::uint64_t trial_id, Choice choice,
                                          double latency) {
  Slot& s = slot(id);
  std::lock_guard lock(s.mutex);
  const double at = now();
  const Json event{{"op", "respond"}, {"at", at}, {"trial_id", trial_id}, {"choice", to_string(choice)},
                   {"latency", latency}};
  return s.mutate(event, [&](Session& session) { return session.respond(at, trial_id, choice, latency); });
}

SessionResults StudyService::results(const std::string& id, bool finalize) {
  Slot& s = slot(id);
  std::lock_guard lock(s.mutex);
  if (s.session->phase() != Phase::Done) {
    if (!finalize) throw Error(ErrorCode::Conflict, "session is not complete; finalize to end it early");
    const double at = now();
    s.mutate(Json{{"op", "finalize"}, {"at", at}}, [&](Session& session) {
      session.finalize(at);
      return 0;
    });
  }
  return s.session->results();
}

void StudyService::reset(const std::string& id) {
  Slot& s = slot(id);
  std::lock_guard lock(s.mutex);
  const double at = now();
  s.mutate(Json{{"op", "reset"}, {"at", at}}, [&](Session& session) {
    session.reset(at);
    return 0;
  });
}

RecordSet StudyService::export_records(const std::string& id) {
  Slot& s = slot(id);
  std::lock_guard lock(s.mutex);
  return s.session->records();
}

SessionStatus StudyService::status(const std::string& id) {
  Slot& s = slot(id);
  std::lock_guard lock(s.mutex);
  return s.session->status();
}

std::vector<std::string> StudyService::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, slot] : sessions_) ids.push_back(id);
  return ids;
}

}  // namespace chroma
