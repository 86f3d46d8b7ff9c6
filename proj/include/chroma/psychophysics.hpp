#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chroma/adaptation.hpp"

namespace chroma {

/// Logistic psychometric function over the signed offset m - a.
struct PsychometricParams {
  double k = 400.0;  // slope, per u'v' unit
  double x0 = 0.0;   // bias, u'v'

  friend bool operator==(const PsychometricParams&, const PsychometricParams&) = default;
};

enum class Choice { Lagging, Further };

std::string to_string(Choice c);
Choice parse_choice(const std::string& s);

/// Probability of choosing the lagging patch.
double psychometric(double offset, const PsychometricParams& p);
/// log P(choice | offset), evaluated without forming the probability.
double log_choice_probability(double offset, Choice choice, const PsychometricParams& p);

double signed_offset(const ChromaticityUV& m, const ChromaticityUV& a, const ChromaticityUV& dir);

struct TrialRecord {
  double t = 0.0;  // s since measurement start
  ChromaticityUV further;
  ChromaticityUV lagging;
  ChromaticityUV midpoint;
  Choice choice = Choice::Lagging;
  double latency = 0.0;  // s
  bool late = false;     // answered after the response window

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Calibration trial; the adaptation state is D65 throughout calibration.
struct CalibrationRecord {
  double m_offset = 0.0;  // signed midpoint offset from D65 along the trajectory
  Choice choice = Choice::Lagging;
  double latency = 0.0;
  bool late = false;

  friend bool operator==(const CalibrationRecord&, const CalibrationRecord&) = default;
};

/// One triphasic presentation and the trials observed during it.
struct MeasurementRun {
  TriphasicSchedule schedule;
  std::vector<TrialRecord> trials;
};

struct PsychometricFitOptions {
  double k_bound = 1e5;   // reported slope when no finite MLE exists
  double x0_bound = 0.1;  // reported bias when every response is the same
  int max_iterations = 200;
};

struct PsychometricFit {
  PsychometricParams params;
  double log_likelihood = 0.0;
  bool separable = false;  // no finite MLE; params sit at the search bound
  bool converged = false;
  int iterations = 0;
};

double calibration_log_likelihood(const std::vector<CalibrationRecord>& records, const PsychometricParams& p);

/// Bernoulli MLE of (k, x0) by Newton's method on the logistic regression.
/// Throws Error(NoData) for fewer than 2 records.
PsychometricFit fit_psychometric(const std::vector<CalibrationRecord>& records,
                                 const PsychometricFitOptions& options = {});

inline constexpr double kProbabilityFloor = 1e-12;

struct LogLikelihood {
  double value = 0.0;
  std::size_t clamped = 0;  // terms floored at log(kProbabilityFloor)
};

LogLikelihood log_likelihood(const std::vector<TrialRecord>& trials, const TriphasicSchedule& s,
                             const AdaptationParams& p_adapt, const PsychometricParams& p_psy);
LogLikelihood log_likelihood(const std::vector<MeasurementRun>& runs, const AdaptationParams& p_adapt,
                             const PsychometricParams& p_psy);

/// Search lattice: k1 = k1_step * (i + 1), k2 = k2_step * j.
struct FitGrid {
  double k1_step = 0.0004;
  int k1_count = 1250;
  double k2_step = 0.0006;
  int k2_count = 1667;

  double k1_at(int i) const { return k1_step * (i + 1); }
  double k2_at(int j) const { return k2_step * j; }
  void validate() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Chi-square (1 dof, 95%) half-threshold in log-likelihood units.
inline constexpr double kProfileThreshold = 3.841458820694124 / 2.0;

struct FitResult {
  AdaptationParams params;
  int k1_index = -1;
  int k2_index = -1;
  double log_likelihood = 0.0;
  std::size_t clamped = 0;
  Interval ci_k1;
  Interval ci_k2;
  std::size_t trial_count = 0;
  bool no_fit = false;          // no trials
  bool flat = false;            // likelihood does not discriminate; CIs span the grid
  bool ci_k1_censored = false;  // interval reaches the grid edge
  bool ci_k2_censored = false;
  bool has_ci = false;
};

struct FitOptions {
  FitGrid grid;
  bool confidence_intervals = true;
  /// Restrict the k1 search to a window around a previous argmax (grid
  /// indices); the window widens while the optimum sits on its edge.
  std::optional<int> warm_start_k1;
  int warm_window = 32;
  unsigned threads = 1;
};

/// Grid-search MLE of (k1, k2), ties broken toward the smallest (k1, k2).
FitResult fit_adaptation(const std::vector<MeasurementRun>& runs, const PsychometricParams& p_psy,
                         const FitOptions& options = {});
FitResult fit_adaptation(const std::vector<TrialRecord>& trials, const TriphasicSchedule& s,
                         const PsychometricParams& p_psy, const FitOptions& options = {});

struct PlacementOptions {
  double sigma = jnd(1.5);       // midpoint jitter
  double separation = jnd(6.0);  // |F - L|
  double luminance = 0.4;        // relative Y at which the patches are shown
  int max_resamples = 100;
};

struct StimulusPair {
  ChromaticityUV further;
  ChromaticityUV lagging;
  ChromaticityUV midpoint;
  int resamples = 0;
  bool clamped = false;  // pulled toward D65 to fit the display gamut
};

/// True when the chromaticity at the given luminance is displayable.
bool stimulus_in_gamut(const ChromaticityUV& c, double luminance);

StimulusPair place_stimuli(const ChromaticityUV& a_hat, const ChromaticityUV& dir, std::mt19937_64& rng,
                           const PlacementOptions& options = {});

struct SimulationOptions {
  PlacementOptions placement;
  double interval = 3.75;                 // s between stimulus onsets
  double ode_dt = 1e-2;                   // RK4 step for the true state
  AdaptationParams predictor{0.1, 0.69};  // running prediction used for placement
};

/// Runs the triphasic protocol against an observer whose state follows the
/// RK4 oracle with `truth` and who answers according to `p_psy`.
std::vector<TrialRecord> simulate_observer(const AdaptationParams& truth, const PsychometricParams& p_psy,
                                           const TriphasicSchedule& s, std::mt19937_64& rng,
                                           const SimulationOptions& options = {});

/// Calibration protocol: midpoints drawn Normal(0, sigma) around D65.
std::vector<CalibrationRecord> simulate_calibration(const PsychometricParams& p_psy, int count, double sigma,
                                                    std::mt19937_64& rng);

// Signal detection.

struct SdtRecord {
  std::string condition;
  bool signal = false;    // a change was present
  bool response = false;  // the observer reported a change
};

struct SdtResult {
  std::string condition;
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t false_alarms = 0;
  std::size_t correct_rejections = 0;
  double hit_rate = 0.0;  // after the 1/(2N) correction
  double fa_rate = 0.0;
  double d_prime = 0.0;
  bool corrected = false;
};

double inverse_normal_cdf(double p);
double d_prime(double hit_rate, double fa_rate);
SdtResult sdt_from_counts(std::size_t hits, std::size_t signal_trials, std::size_t false_alarms,
                          std::size_t noise_trials);
/// One result per condition, in order of first appearance.
std::vector<SdtResult> sdt_analysis(const std::vector<SdtRecord>& records);

struct RocPoint {
  double fa_rate = 0.0;
  double hit_rate = 0.0;
};

/// Equal-variance Gaussian ROC curve for a given d'.
std::vector<RocPoint> roc_curve(double d_prime, int points);

}  // namespace chroma
