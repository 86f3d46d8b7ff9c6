#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chroma/adaptation.hpp"
#include "chroma/power_model.hpp"

namespace chroma {

/// A trajectory together with the adaptation parameters fitted along it.
struct CandidateTrajectory {
  std::string name;
  Trajectory trajectory;
  AdaptationParams params;
};

/// The four measured trajectories with their pilot-study fits.
std::vector<CandidateTrajectory> study_trajectories();

struct OptimizationConfig {
  double t_max = 120.0;     // s
  double delta_t = jnd(5);  // permissible gap, u'v'
  std::vector<CandidateTrajectory> candidates = study_trajectories();

  void validate() const;
};

/// Gap A(t) - a(t) along a linear ramp of speed v started at t = 0.
double gap_at(double v, const AdaptationParams& p, double t);

/// Largest ramp speed whose gap at t_max equals delta_t.
double optimal_velocity(const AdaptationParams& p, double delta_t, double t_max);

struct ParetoPoint {
  std::string trajectory;
  double delta_t = 0.0;
  double delta_t_jnd = 0.0;
  double t_max = 0.0;
  double v = 0.0;         // after truncation
  double distance = 0.0;  // terminal distance along the trajectory
  ChromaticityUV terminal;
  double relative_power = 1.0;
  double saving = 0.0;     // 1 - P(terminal) / P(D65)
  bool truncated = false;  // limited by the trajectory's range or the display gamut
};

ParetoPoint evaluate_candidate(const CandidateTrajectory& c, double delta_t, double t_max,
                               const PowerEvaluator& evaluator);

/// Points ordered by candidate, then by delta_t.
std::vector<ParetoPoint> pareto_sweep(const OptimizationConfig& cfg, const std::vector<double>& delta_ts,
                                      const PowerEvaluator& evaluator, unsigned threads = 1);

struct SensitivityHeatmap {
  std::vector<double> delta_ts;
  std::vector<double> t_maxes;
  std::vector<double> savings;  // row-major: delta_t rows, t_max columns

  double at(std::size_t row, std::size_t col) const { return savings[row * t_maxes.size() + col]; }
};

SensitivityHeatmap sensitivity_heatmap(const CandidateTrajectory& c, const std::vector<double>& delta_ts,
                                       const std::vector<double>& t_maxes, const PowerEvaluator& evaluator,
                                       unsigned threads = 1);

struct Selection {
  std::size_t index = 0;
  ParetoPoint point;
};

/// Candidate with the lowest terminal power; ties keep the earlier one.
Selection select_trajectory(const OptimizationConfig& cfg, const PowerEvaluator& evaluator);

DeploymentSchedule deployment_schedule(const CandidateTrajectory& c, const ParetoPoint& point);

void write_pareto_csv(const std::filesystem::path& path, const std::vector<ParetoPoint>& points);
void write_heatmap_csv(const std::filesystem::path& path, const SensitivityHeatmap& h);

}  // namespace chroma
