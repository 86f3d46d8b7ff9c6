#include "chroma/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "chroma/parallel.hpp"

namespace chroma {

std::vector<CandidateTrajectory> study_trajectories() {
  return {
      {"1.470", Trajectory::linear(1.470), {0.101, 0.685}},
      {"1.863", Trajectory::linear(1.863), {0.107, 0.638}},
      {"2.256", Trajectory::linear(2.256), {0.069, 0.707}},
      {"daylight", Trajectory::daylight(), {0.127, 0.712}},
  };
}

void OptimizationConfig::validate() const {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw Error(ErrorCode::InvalidArgument, "t_max must be positive");
  if (!(delta_t >= 0.0) || !std::isfinite(delta_t)) throw Error(ErrorCode::InvalidArgument, "delta_t must be >= 0");
  for (const auto& c : candidates) c.params.validate();
}

namespace {

// (1 - k2) t + (k2 / k1) (1 - e^{-k1 t}): the gap per unit speed.
double gap_per_speed(const AdaptationParams& p, double t) {
  return (1.0 - p.k2) * t - (p.k2 / p.k1) * std::expm1(-p.k1 * t);
}

}  // namespace

double gap_at(double v, const AdaptationParams& p, double t) { return v * gap_per_speed(p, t); }

double optimal_velocity(const AdaptationParams& p, double delta_t, double t_max) {
  p.validate();
  if (!(delta_t >= 0.0) || !std::isfinite(delta_t)) throw Error(ErrorCode::InvalidArgument, "delta_t must be >= 0");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw Error(ErrorCode::InvalidArgument, "t_max must be positive");
  const double denom = gap_per_speed(p, t_max);
  if (!(denom > 0.0)) throw Error(ErrorCode::Degenerate, "t_max too small to resolve the adaptation gap");
  return delta_t / denom;
}

ParetoPoint evaluate_candidate(const CandidateTrajectory& c, double delta_t, double t_max,
                               const PowerEvaluator& evaluator) {
  ParetoPoint pt;
  pt.trajectory = c.name;
  pt.delta_t = delta_t;
  pt.delta_t_jnd = delta_t / kJnd;
  pt.t_max = t_max;
  pt.v = optimal_velocity(c.params, delta_t, t_max);
  pt.distance = pt.v * t_max;
  if (pt.distance > c.trajectory.max_distance()) {
    pt.distance = c.trajectory.max_distance();
    pt.truncated = true;
  }
  if (!in_srgb_chromaticity_gamut(c.trajectory.point_at(pt.distance))) {
    double ok = 0.0, bad = pt.distance;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (ok + bad);
      if (in_srgb_chromaticity_gamut(c.trajectory.point_at(mid))) ok = mid;
      else bad = mid;
    }
    pt.distance = ok;
    pt.truncated = true;
  }
  if (pt.truncated) pt.v = pt.distance / t_max;
  pt.terminal = c.trajectory.point_at(pt.distance);
  pt.relative_power = evaluator.relative_power(pt.terminal);
  pt.saving = 1.0 - pt.relative_power;
  return pt;
}

std::vector<ParetoPoint> pareto_sweep(const OptimizationConfig& cfg, const std::vector<double>& delta_ts,
                                      const PowerEvaluator& evaluator, unsigned threads) {
  cfg.validate();
  const std::size_t n = delta_ts.size();
  std::vector<ParetoPoint> out(cfg.candidates.size() * n);
  parallel_for(out.size(), threads, [&](std::size_t k) {
    out[k] = evaluate_candidate(cfg.candidates[k / n], delta_ts[k % n], cfg.t_max, evaluator);
  });
  return out;
}

SensitivityHeatmap sensitivity_heatmap(const CandidateTrajectory& c, const std::vector<double>& delta_ts,
                                       const std::vector<double>& t_maxes, const PowerEvaluator& evaluator,
                                       unsigned threads) {
  SensitivityHeatmap h{delta_ts, t_maxes, std::vector<double>(delta_ts.size() * t_maxes.size())};
  const std::size_t cols = t_maxes.size();
  parallel_for(h.savings.size(), threads, [&](std::size_t k) {
    h.savings[k] = evaluate_candidate(c, delta_ts[k / cols], t_maxes[k % cols], evaluator).saving;
  });
  return h;
}

Selection select_trajectory(const OptimizationConfig& cfg, const PowerEvaluator& evaluator) {
  cfg.validate();
  if (cfg.candidates.empty()) throw Error(ErrorCode::InvalidArgument, "no candidate trajectories");
  Selection best;
  for (std::size_t i = 0; i < cfg.candidates.size(); ++i) {
    const ParetoPoint p = evaluate_candidate(cfg.candidates[i], cfg.delta_t, cfg.t_max, evaluator);
    if (i == 0 || p.relative_power < best.point.relative_power) best = {i, p};
  }
  return best;
}

DeploymentSchedule deployment_schedule(const CandidateTrajectory& c, const ParetoPoint& point) {
  DeploymentSchedule s{c.trajectory, point.v, point.t_max};
  s.validate();
  return s;
}

void write_pareto_csv(const std::filesystem::path& path, const std::vector<ParetoPoint>& points) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "trajectory,delta_t,delta_t_jnd,t_max,v,distance,terminal_u,terminal_v,relative_power,saving,truncated\n";
  char buf[320];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%.9g,%.12g,%.12g,%.9f,%.9f,%.12g,%.12g,%d\n", p.trajectory.c_str(),
                  p.delta_t, p.delta_t_jnd, p.t_max, p.v, p.distance, p.terminal.u, p.terminal.v, p.relative_power,
                  p.saving, p.truncated ? 1 : 0);
    out << buf;
  }
}

void write_heatmap_csv(const std::filesystem::path& path, const SensitivityHeatmap& h) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "delta_t,delta_t_jnd,t_max,saving\n";
  char buf[160];
  for (std::size_t r = 0; r < h.delta_ts.size(); ++r) {
    for (std::size_t c = 0; c < h.t_maxes.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.12g\n", h.delta_ts[r], h.delta_ts[r] / kJnd, h.t_maxes[c],
                    h.at(r, c));
      out << buf;
    }
  }
}

}  // namespace chroma
