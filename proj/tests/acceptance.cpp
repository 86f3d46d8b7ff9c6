// Acceptance suite: one PASS/FAIL line per primary criterion.
//
// The process exits non-zero when a criterion fails, unless that criterion is
// listed in kKnownFailures. Known failures still print FAIL; README.md explains
// each of them.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chroma/image_io.hpp"
#include "chroma/optimizer.hpp"
#include "chroma/psychophysics.hpp"
#include "chroma/records_io.hpp"
#include "chroma/study_service.hpp"

using namespace chroma;

namespace {

const std::set<std::string> kKnownFailures = {"landscape"};

struct Outcome {
  std::string id;
  bool pass = false;
};

std::vector<Outcome> outcomes;

void report(const std::string& id, bool pass, const std::string& summary, const std::vector<std::string>& details = {}) {
  std::printf("%s %-18s %s\n", pass ? "PASS" : "FAIL", id.c_str(), summary.c_str());
  for (const auto& d : details) std::printf("       %s\n", d.c_str());
  std::fflush(stdout);
  outcomes.push_back({id, pass});
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

// Positive rearrangement of the optimal-velocity expression, evaluated
// independently of the optimizer.
double velocity_oracle(double k1, double k2, double dT, double t) {
  return dT / ((1.0 - k2) * t + (k2 / k1) * (1.0 - std::exp(-k1 * t)));
}

void optimal_velocity_reproduction() {
  const auto t0 = std::chrono::steady_clock::now();
  const double v = optimal_velocity({0.101, 0.685}, 0.020, 120.0);
  const double took = seconds_since(t0);
  const double oracle = velocity_oracle(0.101, 0.685, 0.020, 120.0);
  const double rel_deployed = std::abs(v - 0.000467) / 0.000467;
  const bool pass = rel_deployed < 0.05 && std::abs(v - oracle) < 1e-9 && took < 1e-3;
  report("optimal_velocity", pass, fmt("v=%.6e, %.2f%% from 0.000467, |v-oracle|=%.1e, %.1f us", v, 100.0 * rel_deployed,
                          std::abs(v - oracle), took * 1e6));
}

void closed_form_vs_ode() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> k1(0.01, 0.5), k2(0.0, 1.0), v(5e-5, 5e-4), phi(0.0, 6.283185307179586),
      d(jnd(1), jnd(6)), hold(5.0, 60.0);
  double worst = 0.0;
  std::size_t samples = 0;
  for (int i = 0; i < 100; ++i) {
    TriphasicSchedule s;
    s.trajectory = Trajectory::linear(phi(rng));
    s.v = v(rng);
    s.D = d(rng);
    s.t1 = hold(rng);
    s.t2 = hold(rng);
    const AdaptationParams p{k1(rng), k2(rng)};
    OdeOptions opt;
    opt.dt = 1e-3;
    const auto states = adaptation_ode(s, p, opt);
    for (std::size_t k = 0; k < states.size(); k += 7) {
      worst = std::max(worst, distance(states[k].value, adaptation_closed_form(s, p, states[k].time)));
      ++samples;
    }
    worst = std::max(worst, distance(states.back().value, adaptation_closed_form(s, p, states.back().time)));
  }
  const double took = seconds_since(t0);
  report("closed_form_ode", worst < 1e-6 && took < 10.0,
         fmt("max |closed form - RK4| = %.2e over %zu samples of 100 schedules, %.2f s", worst, samples, took));
}

void monotonicity() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> k1(0.01, 0.5), k2(0.0, 1.0), v(5e-5, 5e-4), phi(0.0, 6.283185307179586);
  std::size_t violations_t = 0, violations_v = 0, checks = 0;
  for (int i = 0; i < 1000; ++i) {
    TriphasicSchedule s;
    s.trajectory = Trajectory::linear(phi(rng));
    s.v = v(rng);
    s.D = jnd(6);
    const AdaptationParams p{k1(rng), k2(rng)};
    TriphasicSchedule faster = s;
    faster.v = s.v * 1.25;
    auto gap = [&](const TriphasicSchedule& sc, double t) {
      return signed_offset(illuminant_at(sc, t), adaptation_closed_form(sc, p, t), sc.direction());
    };
    double prev = gap(s, 0.0);
    const double t_end = faster.ramp_end();
    for (int k = 1; k <= 200; ++k) {
      const double t = t_end * k / 200.0;
      const double g = gap(s, t);
      if (g < prev - 1e-12) ++violations_t;
      if (gap(faster, t) < g - 1e-12) ++violations_v;
      prev = g;
      ++checks;
    }
  }
  report("gap_monotone", violations_t == 0 && violations_v == 0,
         fmt("%zu violations in t, %zu in v over %zu ramp samples of 1000 draws", violations_t, violations_v, checks));
}

void post_ramp_safety() {
  bool pass = true;
  std::vector<std::string> details;
  for (const auto& c : study_trajectories()) {
    const double dT = jnd(5), t_max = 120.0;
    const double v = optimal_velocity(c.params, dT, t_max);
    const double dist = std::min(v * t_max, c.trajectory.max_distance());
    const DeploymentSchedule s{c.trajectory, dist / t_max, t_max};
    OdeOptions opt;
    opt.dt = 1e-2;
    opt.breakpoints = {t_max};
    const auto states = adaptation_ode([&](double t) { return s.illuminant_at(t); }, c.params, 30.0 * t_max, opt);
    const ChromaticityUV dir = c.trajectory.direction(dist);
    double worst = 0.0;
    for (const auto& st : states) {
      if (st.time > t_max) worst = std::max(worst, signed_offset(s.illuminant_at(st.time), st.value, dir));
    }
    const double asymptotic = (1.0 - c.params.k2) * s.v * t_max;
    const bool ok = worst <= dT + 1e-12 && asymptotic <= dT;
    pass = pass && ok;
    details.push_back(fmt("%-8s max post-ramp gap %.5f, asymptotic %.5f, bound %.3f", c.name.c_str(), worst,
                          asymptotic, dT));
  }
  report("post_ramp_safety", pass, "ODE gap after t_max stays within delta_T for the four study trajectories", details);
}

void mle_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const PsychometricParams psy{400.0, 0.002};
  const std::vector<double> velocities{0.0001, 0.0002, 0.0003};
  const int seeds = 100, repeats = 12;
  bool pass = true;
  std::vector<std::string> details;
  for (const auto& c : study_trajectories()) {
    std::vector<double> e1, e2;
    int cover1 = 0, cover2 = 0;
    for (int seed = 0; seed < seeds; ++seed) {
      std::mt19937_64 rng(1000003ULL * (seed + 1) + static_cast<std::uint64_t>(c.name[0]));
      std::vector<MeasurementRun> runs;
      for (double v : velocities) {
        for (int r = 0; r < repeats; ++r) {
          TriphasicSchedule s;
          s.trajectory = c.trajectory;
          s.v = v;
          runs.push_back({s, simulate_observer(c.params, psy, s, rng)});
        }
      }
      const FitResult f = fit_adaptation(runs, psy);
      e1.push_back(std::abs(f.params.k1 - c.params.k1));
      e2.push_back(std::abs(f.params.k2 - c.params.k2));
      cover1 += f.ci_k1.contains(c.params.k1) ? 1 : 0;
      cover2 += f.ci_k2.contains(c.params.k2) ? 1 : 0;
    }
    const double m1 = median(e1), m2 = median(e2);
    const bool ok = m1 <= 0.03 && m2 <= 0.07 && cover1 >= 85 && cover2 >= 85;
    pass = pass && ok;
    details.push_back(fmt("%-8s k1=%.3f k2=%.3f: median |err| %.4f / %.4f, CI coverage %d%% / %d%%", c.name.c_str(),
                          c.params.k1, c.params.k2, m1, m2, cover1, cover2));
  }
  const double took = seconds_since(t0);
  pass = pass && took < 300.0;
  report("mle_recovery", pass,
         fmt("4 rows x %d seeds x 36 runs (3 velocities x %d), k=400 x0=0.002, %.0f s", seeds, repeats, took), details);
}

void online_offline() {
  double now = 0.0;
  StudyService svc({{}, [&now] { return now; }});
  SessionConfig cfg;
  cfg.warmup = 60.0;
  cfg.rest = 180.0;
  cfg.runs.clear();
  for (double v : {0.0001, 0.0002, 0.0003}) cfg.runs.push_back(TriphasicSchedule{Trajectory::linear(1.47), v});
  const std::string id = svc.create_session(cfg);
  const AdaptationParams truth{0.101, 0.685};
  const PsychometricParams psy{400.0, 0.002};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t trials = 0;
  for (;;) {
    const NextTrial n = svc.next_trial(id);
    if (n.notice == "done") break;
    if (!n.trial) {
      now += n.wait > 0.0 ? n.wait : 0.01;
      continue;
    }
    const TrialSpec& t = *n.trial;
    double offset = t.m_offset;
    if (t.phase == Phase::Measurement) {
      const TriphasicSchedule& s = cfg.runs[t.run];
      offset = signed_offset(t.midpoint, adaptation_closed_form(s, truth, t.t), s.direction());
    }
    const Choice choice = unit(rng) < psychometric(offset, psy) ? Choice::Lagging : Choice::Further;
    now += 1.2;
    svc.submit_response(id, t.id, choice, 0.45);
    now += 2.55;
    ++trials;
  }
  const SessionResults online = svc.results(id);
  std::stringstream jsonl;
  write_records(jsonl, svc.export_records(id));
  const RecordSet back = read_records(jsonl);
  FitOptions opts;
  opts.grid = cfg.grid;
  const FitResult offline = fit_adaptation(back.runs, *back.psychometric, opts);
  const bool same = online.fit.params.k1 == offline.params.k1 && online.fit.params.k2 == offline.params.k2 &&
                    online.fit.log_likelihood == offline.log_likelihood && online.fit.ci_k1.lo == offline.ci_k1.lo &&
                    online.fit.ci_k1.hi == offline.ci_k1.hi && online.fit.ci_k2.lo == offline.ci_k2.lo &&
                    online.fit.ci_k2.hi == offline.ci_k2.hi;
  report("online_offline", same && !online.fit.no_fit,
         fmt("%zu trials; online (%.4f, %.4f) LL %.6f, offline (%.4f, %.4f) LL %.6f", trials, online.fit.params.k1,
             online.fit.params.k2, online.fit.log_likelihood, offline.params.k1, offline.params.k2,
             offline.log_likelihood));
}

void landscape() {
  const auto files = list_images(CHROMA_CORPUS);
  const ColorHistogram h = build_histogram(std::vector<std::filesystem::path>(files.begin(), files.end()), 64);
  const PowerEvaluator ev(h, DisplayPowerParams{});
  std::vector<std::string> details;
  details.push_back(fmt("corpus: %zu images, %zu populated bins", files.size(), h.entries().size()));

  const PowerLandscape l = power_landscape(LandscapeGrid{}, ev);
  const ChromaticityUV w = d65_uv();
  const double at_d65 = l.at(l.d65_i, l.d65_j);
  const bool d65_ok = at_d65 == 1.0 && distance(l.node(l.d65_i, l.d65_j), w) == 0.0;
  details.push_back(fmt("D65 node: %.17g", at_d65));

  bool below = true;
  for (const auto& c : study_trajectories()) {
    const double r = ev.relative_power(c.trajectory.point_at(jnd(6)));
    below = below && r < 1.0;
    details.push_back(fmt("%-8s relative power at 6 JND: %.4f", c.name.c_str(), r));
  }
  // Toward the sRGB blue primary.
  const ChromaticityUV blue = xyz_uv(rgb_xyz({0.0, 0.0, 1.0}));
  const ChromaticityUV to_blue = (1.0 / distance(blue, w)) * (blue - w);
  const double r_blue = ev.relative_power(w + jnd(6) * to_blue);
  const bool blue_ok = r_blue > 1.0;
  details.push_back(fmt("toward blue at 6 JND: %.4f", r_blue));

  OptimizationConfig cfg;
  std::vector<double> ds;
  for (int k = 1; k <= 6; ++k) ds.push_back(jnd(k));
  const auto pts = pareto_sweep(cfg, ds, ev);
  bool dominates = true;
  for (std::size_t k = 0; k < ds.size(); ++k) {
    std::string row = fmt("dT=%d JND savings:", int(k + 1));
    for (std::size_t c = 0; c < cfg.candidates.size(); ++c) {
      const ParetoPoint& p = pts[c * ds.size() + k];
      row += fmt(" %s %.3f%s", p.trajectory.c_str(), p.saving, p.truncated ? "*" : "");
      if (c > 0 && p.saving >= pts[k].saving) dominates = false;
    }
    details.push_back(row);
  }
  details.push_back("(* = cut short at the end of the daylight locus)");
  const double band = pts[4].saving;
  const bool band_ok = band >= 0.15 && band <= 0.45;
  details.push_back(fmt("1.470 saving at 5 JND: %.1f%% (band 15-45%%)", 100.0 * band));
  details.push_back(fmt("D65=1 %s, <1 at 6 JND %s, blue>1 %s, 1.470 dominates %s, band %s", d65_ok ? "ok" : "FAILED",
                        below ? "ok" : "FAILED", blue_ok ? "ok" : "FAILED", dominates ? "ok" : "FAILED",
                        band_ok ? "ok" : "FAILED"));
  report("landscape", d65_ok && below && blue_ok && dominates && band_ok,
         "relative-power landscape and trajectory ordering, default (1,1,2) weights", details);
}

void sensitivity() {
  const auto files = list_images(CHROMA_CORPUS);
  const ColorHistogram h = build_histogram(std::vector<std::filesystem::path>(files.begin(), files.end()), 64);
  const PowerEvaluator ev(h, DisplayPowerParams{});
  std::vector<double> ds, ts;
  for (int k = 1; k <= 6; ++k) ds.push_back(jnd(k));
  for (double t = 120.0; t <= 1200.0; t += 30.0) ts.push_back(t);
  const auto hm = sensitivity_heatmap(study_trajectories()[0], ds, ts, ev);
  std::size_t bad = 0, checks = 0;
  double worst = -1.0;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t j = 1; j + 1 < ts.size(); ++j) {
      const double d2 = hm.at(r, j + 1) - 2.0 * hm.at(r, j) + hm.at(r, j - 1);
      worst = std::max(worst, d2);
      if (d2 > 1e-12) ++bad;
      ++checks;
    }
  }
  report("sensitivity_shape", bad == 0,
         fmt("%zu positive second differences of %zu along t_max in [120, 1200] s, largest %.2e", bad, checks, worst));
}

// Bisection on the normal CDF written with erfc.
double quantile_oracle(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

void sdt() {
  bool zero = true;
  for (double p : {0.01, 0.125, 0.5, 0.701, 0.99}) zero = zero && d_prime(p, p) == 0.0;
  const double got = d_prime(0.701, 0.125);
  const double oracle = quantile_oracle(0.701) - quantile_oracle(0.125);
  report("sdt", zero && std::abs(got - oracle) < 1e-3,
         fmt("d'(h=fa)=0 %s; d'(0.701, 0.125)=%.6f, oracle %.6f", zero ? "exact" : "NOT exact", got, oracle));
}

void colorimetry() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0), phi(0.0, 6.283185307179586), rad(0.0, 0.04);
  auto random_white = [&] {
    const double a = phi(rng), r = rad(rng);
    return uv_xyz({d65_uv().u + r * std::cos(a), d65_uv().v + r * std::sin(a)}, 0.5 + unit(rng));
  };
  double self = 0.0, inv = 0.0, white = 0.0, trip = 0.0, conv = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const XYZ s = random_white(), t = random_white();
    const Mat3 id = bradford_cat(s, s).m;
    const Mat3 prod = bradford_cat(t, s).m * bradford_cat(s, t).m;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        self = std::max(self, std::abs(id(r, c) - (r == c ? 1.0 : 0.0)));
        inv = std::max(inv, std::abs(prod(r, c) - (r == c ? 1.0 : 0.0)));
      }
    }
    const LinearRGB sw = xyz_rgb(s), tw = xyz_rgb(t);
    const LinearRGB mapped = apply_cat(sw, bradford_cat(s, t));
    white = std::max({white, std::abs(mapped.r - tw.r), std::abs(mapped.g - tw.g), std::abs(mapped.b - tw.b)});
    const LinearRGB c{unit(rng), unit(rng), unit(rng)};
    const LinearRGB back = apply_cat(apply_cat(c, cat_from_d65(xyz_uv(t))), bradford_cat(uv_xyz(xyz_uv(t), d65_xyz().y), d65_xyz()));
    trip = std::max({trip, std::abs(back.r - c.r), std::abs(back.g - c.g), std::abs(back.b - c.b)});
    const XYZ x = rgb_xyz(c);
    const LinearRGB c2 = xyz_rgb(x);
    const XYZ x2 = uv_xyz(xyz_uv(x), x.y);
    conv = std::max({conv, std::abs(c2.r - c.r) / std::max(c.r, 1e-3), std::abs(c2.g - c.g) / std::max(c.g, 1e-3),
                     std::abs(c2.b - c.b) / std::max(c.b, 1e-3), std::abs(x2.x - x.x) / x.x,
                     std::abs(x2.z - x.z) / std::max(x.z, 1e-3)});
  }
  const bool pass = self < 1e-12 && inv < 1e-9 && white < 1e-9 && trip < 1e-9 && conv < 1e-10;
  report("colorimetry", pass,
         fmt("10k draws: self-map %.1e, inverse %.1e, white %.1e, CAT round trip %.1e, rgb/xyz/uv round trip %.1e",
             self, inv, white, trip, conv));
}

}  // namespace

int main() {
  optimal_velocity_reproduction();
  closed_form_vs_ode();
  monotonicity();
  post_ramp_safety();
  online_offline();
  landscape();
  sensitivity();
  sdt();
  colorimetry();
  mle_recovery();

  std::size_t passed = 0, known = 0, unexpected = 0;
  for (const auto& o : outcomes) {
    if (o.pass) ++passed;
    else if (kKnownFailures.count(o.id)) ++known;
    else ++unexpected;
  }
  std::printf("\n%zu of %zu criteria pass; %zu known failure(s), %zu unexpected\n", passed, outcomes.size(), known,
              unexpected);
  return unexpected == 0 ? 0 : 1;
}
