#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "chroma/http_frontend.hpp"
#include "chroma/optimizer.hpp"
#include "chroma/psychophysics.hpp"
#include "chroma/records_io.hpp"
#include "chroma/schedule_json.hpp"
#include "chroma/shift_pipeline.hpp"
#include "chroma/study_service.hpp"

using namespace chroma;
namespace fs = std::filesystem;

namespace {

// Inline JSON when the argument starts with '{', otherwise a file path.
Json json_arg(const std::string& arg) {
  if (!arg.empty() && arg.front() == '{') return parse_json(arg, "argument");
  return read_json_file(arg);
}

// A u'v' distance, or a JND count when suffixed with "jnd".
double distance_arg(const std::string& arg) {
  std::string s = arg;
  bool in_jnd = false;
  if (s.size() > 3 && s.compare(s.size() - 3, 3, "jnd") == 0) {
    in_jnd = true;
    s.resize(s.size() - 3);
  }
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw Error(ErrorCode::InvalidArgument, "not a distance: '" + arg + "'");
  return in_jnd ? jnd(x) : x;
}

// "a:b:step" or "a,b,c".
std::vector<double> list_arg(const std::string& arg) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double x = std::stod(s, &used);
      if (used == s.size()) return x;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::InvalidArgument, "not a number list: '" + arg + "'");
  };
  if (arg.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(arg);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw Error(ErrorCode::InvalidArgument, "range must be start:stop:step");
    const double a = number(parts[0]), b = number(parts[1]), step = number(parts[2]);
    if (!(step > 0.0) || b < a) throw Error(ErrorCode::InvalidArgument, "range needs step > 0 and stop >= start");
    const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(a + step * static_cast<double>(i));
    return out;
  }
  std::stringstream ss(arg);
  for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty number list");
  return out;
}

Trajectory trajectory_arg(const std::string& arg) {
  if (arg == "daylight") return Trajectory::daylight();
  try {
    std::size_t used = 0;
    const double phi = std::stod(arg, &used);
    if (used == arg.size()) return Trajectory::linear(phi);
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidArgument, "trajectory must be an angle in radians or 'daylight'");
}

DisplayPowerParams display_arg(const std::string& arg) {
  if (arg.empty() || arg == "default") return DisplayPowerParams{};
  return display_params_from_json(json_arg(arg));
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

PsychometricParams psychometric_for(const RecordSet& set, std::optional<double> k, std::optional<double> x0) {
  if (k || x0) {
    PsychometricParams p;
    if (k) p.k = *k;
    if (x0) p.x0 = *x0;
    return p;
  }
  if (set.calibration.size() >= 2) return fit_psychometric(set.calibration).params;
  if (set.psychometric) return *set.psychometric;
  throw Error(ErrorCode::NoData, "no calibration records or psychometric line; pass --k and --x0");
}

std::sig_atomic_t volatile g_stop = 0;
HttpFrontend* g_frontend = nullptr;

void on_signal(int) {
  g_stop = 1;
  if (g_frontend) g_frontend->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chromatic-adaptation power-saving toolkit"};
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads (results do not depend on it)")->check(CLI::Range(1u, 1024u));

  // histogram
  auto* histogram = app.add_subcommand("histogram", "Build a color histogram from an image directory");
  std::string corpus, hist_out;
  int bins = 64;
  histogram->add_option("corpus", corpus, "Image directory")->required();
  histogram->add_option("out", hist_out, "Histogram CSV to write")->required();
  histogram->add_option("--bins", bins, "Levels per channel (16-256)");

  // landscape
  auto* landscape = app.add_subcommand("landscape", "Relative-power landscape and savings boundary");
  std::string land_hist, land_params, land_out, land_clip = "clamp";
  LandscapeGrid grid;
  landscape->add_option("hist", land_hist, "Histogram CSV")->required();
  landscape->add_option("params", land_params, "Display power params JSON, or 'default'")->required();
  landscape->add_option("out", land_out, "Output prefix (.csv, .pgm, _boundary.csv)")->required();
  landscape->add_option("--nu", grid.nu, "Nodes along u'");
  landscape->add_option("--nv", grid.nv, "Nodes along v'");
  landscape->add_option("--u-range", [&grid](const CLI::results_t& r) {
    const auto v = list_arg(r.at(0));
    if (v.size() != 2) return false;
    grid.u_min = v[0];
    grid.u_max = v[1];
    return true;
  }, "u' bounds as min,max");
  landscape->add_option("--v-range", [&grid](const CLI::results_t& r) {
    const auto v = list_arg(r.at(0));
    if (v.size() != 2) return false;
    grid.v_min = v[0];
    grid.v_max = v[1];
    return true;
  }, "v' bounds as min,max");
  landscape->add_option("--clip", land_clip, "clamp, project or none");

  // fit-calibration
  auto* fit_cal = app.add_subcommand("fit-calibration", "Fit the psychometric function to calibration records");
  std::string cal_in;
  fit_cal->add_option("records", cal_in, "Records JSONL")->required();

  // fit-adaptation
  auto* fit_ad = app.add_subcommand("fit-adaptation", "Grid-search MLE of k1, k2 with profile CIs");
  std::string ad_in, ad_schedule;
  std::optional<double> ad_k, ad_x0;
  bool ad_no_ci = false;
  FitGrid fit_grid;
  fit_ad->add_option("records", ad_in, "Records JSONL")->required();
  fit_ad->add_option("schedule", ad_schedule, "Schedule JSON for records without run lines");
  fit_ad->add_option("--k", ad_k, "Psychometric slope (overrides calibration)");
  fit_ad->add_option("--x0", ad_x0, "Psychometric bias (overrides calibration)");
  fit_ad->add_flag("--no-ci", ad_no_ci, "Skip confidence intervals");
  fit_ad->add_option("--k1-step", fit_grid.k1_step);
  fit_ad->add_option("--k1-count", fit_grid.k1_count);
  fit_ad->add_option("--k2-step", fit_grid.k2_step);
  fit_ad->add_option("--k2-count", fit_grid.k2_count);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Simulated observer through the full protocol");
  std::string sim_truth, sim_schedule, sim_out = "-", sim_velocities;
  std::optional<std::uint64_t> sim_seed;
  double sim_k = 400.0, sim_x0 = 0.002;
  int sim_cal = 70, sim_repeats = 1;
  simulate->add_option("truth", sim_truth, "True adaptation params JSON ({\"k1\",\"k2\"})")->required();
  simulate->add_option("schedule", sim_schedule, "Triphasic schedule JSON")->required();
  simulate->add_option("--seed", sim_seed, "Random seed")->required();
  simulate->add_option("--k", sim_k, "Observer psychometric slope");
  simulate->add_option("--x0", sim_x0, "Observer psychometric bias");
  simulate->add_option("--calibration", sim_cal, "Calibration trials");
  simulate->add_option("--repeats", sim_repeats, "Runs per velocity");
  simulate->add_option("--velocities", sim_velocities, "Comma list of velocities overriding the schedule's");
  simulate->add_option("-o,--out", sim_out, "Output JSONL ('-' for stdout)");

  // optimize
  auto* optimize = app.add_subcommand("optimize", "Optimal ramp velocity and deployment schedule");
  std::string opt_params, opt_dt, opt_traj = "1.47", opt_out;
  double opt_tmax = 120.0;
  optimize->add_option("params", opt_params, "Adaptation params JSON")->required();
  optimize->add_option("delta_t", opt_dt, "Permissible gap (u'v', or e.g. 5jnd)")->required();
  optimize->add_option("t_max", opt_tmax, "Ramp duration in seconds")->required();
  optimize->add_option("--trajectory", opt_traj, "Angle in radians or 'daylight'");
  optimize->add_option("-o,--out", opt_out, "Write the deployment schedule JSON here");

  // pareto
  auto* pareto = app.add_subcommand("pareto", "Saving vs permissible gap for each trajectory");
  std::string par_hist, par_params = "default", par_out = "-", par_deltas = "0:6:0.5", par_clip = "clamp";
  double par_tmax = 120.0;
  pareto->add_option("hist", par_hist, "Histogram CSV")->required();
  pareto->add_option("--params", par_params, "Display power params JSON");
  pareto->add_option("--delta-jnd", par_deltas, "JND list or start:stop:step");
  pareto->add_option("--t-max", par_tmax, "Ramp duration in seconds");
  pareto->add_option("--clip", par_clip, "clamp, project or none");
  pareto->add_option("-o,--out", par_out, "Output CSV");

  // heatmap
  auto* heatmap = app.add_subcommand("heatmap", "Saving over (delta_t, t_max) for one trajectory");
  std::string hm_hist, hm_params = "default", hm_out = "-", hm_traj = "1.470", hm_deltas = "0:6:0.5",
                      hm_tmax = "30:600:30", hm_clip = "clamp";
  heatmap->add_option("hist", hm_hist, "Histogram CSV")->required();
  heatmap->add_option("--trajectory", hm_traj, "1.470, 1.863, 2.256 or daylight");
  heatmap->add_option("--params", hm_params, "Display power params JSON");
  heatmap->add_option("--delta-jnd", hm_deltas, "JND list or start:stop:step");
  heatmap->add_option("--t-max", hm_tmax, "Seconds list or start:stop:step");
  heatmap->add_option("--clip", hm_clip, "clamp, project or none");
  heatmap->add_option("-o,--out", hm_out, "Output CSV");

  // shift
  auto* shift = app.add_subcommand("shift", "Apply a deployment schedule to a frame sequence");
  std::string sh_in, sh_out, sh_schedule, sh_clip = "clamp", sh_power = "default", sh_report;
  double sh_fps = 30.0;
  shift->add_option("in_dir", sh_in, "Input frames")->required();
  shift->add_option("out_dir", sh_out, "Output frames")->required();
  shift->add_option("schedule", sh_schedule, "Deployment schedule JSON")->required();
  shift->add_option("--fps", sh_fps, "Frames per second");
  shift->add_option("--clip", sh_clip, "clamp or project");
  shift->add_option("--power-params", sh_power, "Display power params JSON");
  shift->add_option("--report", sh_report, "Frame report CSV (default: <out_dir>/report.csv)");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the study service over HTTP");
  std::string sv_host = "127.0.0.1", sv_data = "sessions", sv_assets;
  int sv_port = 8080;
  serve->add_option("--host", sv_host);
  serve->add_option("--port", sv_port);
  serve->add_option("--data-dir", sv_data, "Session persistence directory");
  serve->add_option("--assets", sv_assets, "Directory served under /assets");

  // sdt
  auto* sdt = app.add_subcommand("sdt", "d', hit and false-alarm rates per condition");
  std::string sdt_in;
  int sdt_points = 21;
  sdt->add_option("records", sdt_in, "JSONL with sdt lines")->required();
  sdt->add_option("--roc-points", sdt_points, "Points on each ROC curve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*histogram) {
      const auto h = build_histogram(fs::path(corpus), bins,
                                     [](const std::string& w) { std::cerr << "warning: " << w << '\n'; }, threads);
      write_histogram(hist_out, h);
      std::cout << dump(Json{{"bins_per_channel", h.bins()}, {"pixels", h.pixel_count()},
                             {"populated_bins", h.entries().size()}});
    } else if (*landscape) {
      const PowerEvaluator ev(read_histogram(land_hist), display_arg(land_params), parse_clip_policy(land_clip));
      const PowerLandscape l = power_landscape(grid, ev, threads);
      const auto boundary = savings_boundary(l);
      write_landscape_csv(land_out + ".csv", l);
      write_landscape_pgm(land_out + ".pgm", l);
      write_contours_csv(land_out + "_boundary.csv", boundary);
      std::cout << dump(Json{{"d65_node", {l.d65_i, l.d65_j}},
                             {"d65_relative_power", l.at(l.d65_i, l.d65_j)},
                             {"boundary_polylines", boundary.size()}});
    } else if (*fit_cal) {
      const RecordSet set = read_records(fs::path(cal_in));
      std::cout << dump(to_json(fit_psychometric(set.calibration)));
    } else if (*fit_ad) {
      RecordSet set = read_records(fs::path(ad_in));
      if (!set.loose_trials.empty()) {
        if (ad_schedule.empty()) throw Error(ErrorCode::InvalidArgument, "records have trials without a run; pass a schedule");
        set.runs.insert(set.runs.begin(), MeasurementRun{triphasic_from_json(json_arg(ad_schedule)), set.loose_trials});
      } else if (!ad_schedule.empty()) {
        const TriphasicSchedule s = triphasic_from_json(json_arg(ad_schedule));
        for (auto& r : set.runs) r.schedule = s;
      }
      FitOptions opts;
      opts.grid = fit_grid;
      opts.confidence_intervals = !ad_no_ci;
      opts.threads = threads;
      const PsychometricParams psy = psychometric_for(set, ad_k, ad_x0);
      Json out = to_json(fit_adaptation(set.runs, psy, opts));
      out["psychometric"] = {{"k", psy.k}, {"x0", psy.x0}};
      std::cout << dump(out);
    } else if (*simulate) {
      const AdaptationParams truth = adaptation_params_from_json(json_arg(sim_truth));
      const TriphasicSchedule base = triphasic_from_json(json_arg(sim_schedule));
      const PsychometricParams psy{sim_k, sim_x0};
      std::vector<double> velocities{base.v};
      if (!sim_velocities.empty()) velocities = list_arg(sim_velocities);
      std::mt19937_64 rng(*sim_seed);
      RecordSet set;
      set.calibration = simulate_calibration(psy, sim_cal, jnd(3), rng);
      for (double v : velocities) {
        for (int r = 0; r < sim_repeats; ++r) {
          TriphasicSchedule s = base;
          s.v = v;
          s.validate();
          set.runs.push_back({s, simulate_observer(truth, psy, s, rng)});
        }
      }
      std::ostringstream out;
      write_records(out, set);
      write_text(sim_out, out.str());
    } else if (*optimize) {
      const AdaptationParams p = adaptation_params_from_json(json_arg(opt_params));
      const double dt = distance_arg(opt_dt);
      const double v = optimal_velocity(p, dt, opt_tmax);
      DeploymentSchedule s{trajectory_arg(opt_traj), v, opt_tmax};
      s.validate();
      if (!opt_out.empty()) write_json_file(opt_out, to_json(s));
      const ChromaticityUV term = s.terminal();
      std::cout << dump(Json{{"v", v},
                             {"gap_at_t_max", gap_at(v, p, opt_tmax)},
                             {"asymptotic_gap", (1.0 - p.k2) * v * opt_tmax},
                             {"terminal", {term.u, term.v}},
                             {"schedule", to_json(s)}});
    } else if (*pareto) {
      const PowerEvaluator ev(read_histogram(par_hist), display_arg(par_params), parse_clip_policy(par_clip));
      OptimizationConfig cfg;
      cfg.t_max = par_tmax;
      std::vector<double> deltas;
      for (double d : list_arg(par_deltas)) deltas.push_back(jnd(d));
      const auto points = pareto_sweep(cfg, deltas, ev, threads);
      if (par_out == "-") {
        const fs::path tmp = fs::temp_directory_path() / ("chroma_pareto_" + std::to_string(::getpid()) + ".csv");
        write_pareto_csv(tmp, points);
        std::ifstream in(tmp);
        std::cout << in.rdbuf();
        fs::remove(tmp);
      } else {
        write_pareto_csv(par_out, points);
      }
    } else if (*heatmap) {
      const PowerEvaluator ev(read_histogram(hm_hist), display_arg(hm_params), parse_clip_policy(hm_clip));
      std::optional<CandidateTrajectory> cand;
      for (const auto& c : study_trajectories()) {
        if (c.name == hm_traj) cand = c;
      }
      if (!cand) throw Error(ErrorCode::InvalidArgument, "unknown trajectory '" + hm_traj + "'");
      std::vector<double> deltas;
      for (double d : list_arg(hm_deltas)) deltas.push_back(jnd(d));
      const auto h = sensitivity_heatmap(*cand, deltas, list_arg(hm_tmax), ev, threads);
      if (hm_out == "-") {
        const fs::path tmp = fs::temp_directory_path() / ("chroma_heatmap_" + std::to_string(::getpid()) + ".csv");
        write_heatmap_csv(tmp, h);
        std::ifstream in(tmp);
        std::cout << in.rdbuf();
        fs::remove(tmp);
      } else {
        write_heatmap_csv(hm_out, h);
      }
    } else if (*shift) {
      SequenceOptions opts;
      opts.fps = sh_fps;
      opts.clip = parse_clip_policy(sh_clip);
      opts.params = display_arg(sh_power);
      opts.threads = threads;
      const auto report = process_sequence(sh_in, sh_out, deployment_from_json(json_arg(sh_schedule)), opts);
      const fs::path report_path = sh_report.empty() ? fs::path(sh_out) / "report.csv" : fs::path(sh_report);
      write_frame_report_csv(report_path, report);
      std::cout << dump(Json{{"frames", report.frames.size()},
                             {"energy", report.energy},
                             {"baseline_energy", report.baseline_energy},
                             {"saving", report.saving()},
                             {"report", report_path.string()}});
    } else if (*serve) {
      StudyService service({sv_data, {}});
      HttpFrontend frontend(service, sv_assets);
      g_frontend = &frontend;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving on http://" << sv_host << ':' << sv_port << '\n';
      if (!frontend.listen(sv_host, sv_port) && !g_stop) {
        throw Error(ErrorCode::Io, "cannot listen on " + sv_host + ":" + std::to_string(sv_port));
      }
      g_frontend = nullptr;
    } else if (*sdt) {
      const RecordSet set = read_records(fs::path(sdt_in));
      Json out = Json::array();
      for (const auto& r : sdt_analysis(set.sdt)) {
        Json roc = Json::array();
        for (const auto& p : roc_curve(r.d_prime, sdt_points)) roc.push_back({p.fa_rate, p.hit_rate});
        out.push_back({{"condition", r.condition},
                       {"hits", r.hits},
                       {"misses", r.misses},
                       {"false_alarms", r.false_alarms},
                       {"correct_rejections", r.correct_rejections},
                       {"hit_rate", r.hit_rate},
                       {"fa_rate", r.fa_rate},
                       {"d_prime", r.d_prime},
                       {"corrected", r.corrected},
                       {"roc", roc}});
      }
      std::cout << dump(out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
