#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "chroma/colorimetry.hpp"

namespace chroma {

/// First-order adaptation dynamics a' = k1 (k2 A - a), applied to the u'v'
/// offset from D65.
struct AdaptationParams {
  double k1 = 0.1;  // rate, 1/s
  double k2 = 0.7;  // completeness, [0, 1]

  void validate() const;
  friend bool operator==(const AdaptationParams&, const AdaptationParams&) = default;
};

/// A path in u'v' starting at D65, parameterized by u'v' distance travelled.
class Trajectory {
 public:
  enum class Kind { Linear, Daylight };

  static Trajectory linear(double phi_radians);
  static Trajectory daylight();

  Kind kind() const { return kind_; }
  /// Direction angle of a linear trajectory (0 for daylight).
  double angle() const { return phi_; }
  ChromaticityUV origin() const { return d65_uv(); }

  /// Throws Error(OutOfRange) past the end of a daylight trajectory.
  ChromaticityUV point_at(double distance) const;
  /// Unit direction used by the scalar model: u for a linear trajectory, the
  /// chord from D65 to point_at(distance) for the daylight locus.
  ChromaticityUV direction(double distance) const;
  /// Largest valid distance (infinite for linear trajectories).
  double max_distance() const;

  std::string label() const;

  friend bool operator==(const Trajectory& a, const Trajectory& b) { return a.kind_ == b.kind_ && a.phi_ == b.phi_; }

 private:
  Trajectory(Kind kind, double phi) : kind_(kind), phi_(phi), dir_{std::cos(phi), std::sin(phi)} {}

  Kind kind_ = Kind::Linear;
  double phi_ = 0.0;
  ChromaticityUV dir_;
};

/// Ramp away from D65 at speed v for distance D, hold for t1, return to D65
/// for t2.
struct TriphasicSchedule {
  Trajectory trajectory = Trajectory::linear(1.47);
  double v = 0.0002;  // u'v' per second
  double D = jnd(6);  // u'v'
  double t1 = 60.0;   // s
  double t2 = 60.0;   // s

  void validate() const;
  double ramp_end() const { return D / v; }
  double hold_end() const { return ramp_end() + t1; }
  double duration() const { return hold_end() + t2; }
  ChromaticityUV direction() const { return trajectory.direction(D); }
  std::vector<double> breakpoints() const { return {ramp_end(), hold_end()}; }
};

/// Deployment program: ramp from D65 at speed v until t_max, then hold.
struct DeploymentSchedule {
  Trajectory trajectory = Trajectory::linear(1.47);
  double v = 0.0;        // u'v' per second
  double t_max = 120.0;  // s

  void validate() const;
  double terminal_distance() const { return v * t_max; }
  ChromaticityUV terminal() const { return trajectory.point_at(terminal_distance()); }
  /// Illuminant at time t >= 0; constant from t_max on.
  ChromaticityUV illuminant_at(double t) const;
};

struct AdaptationState {
  double time = 0.0;
  ChromaticityUV value;
};

/// Throws Error(OutOfRange) for t outside [0, duration].
ChromaticityUV illuminant_at(const TriphasicSchedule& s, double t);

/// Closed-form adaptation offset along the schedule direction for k2 = 1.
/// The full offset is linear in k2.
double adaptation_unit_offset(const TriphasicSchedule& s, double k1, double t);
double adaptation_offset(const TriphasicSchedule& s, const AdaptationParams& p, double t);
ChromaticityUV adaptation_closed_form(const TriphasicSchedule& s, const AdaptationParams& p, double t);

using IlluminantFn = std::function<ChromaticityUV(double)>;

struct OdeOptions {
  double dt = 1e-3;
  /// Times where the illuminant may jump. Steps land on them and the
  /// illuminant is sampled from the left inside each segment.
  std::vector<double> breakpoints;
  /// Sorted output times; empty means every step.
  std::vector<double> sample_times;
  ChromaticityUV initial = d65_uv();
};

/// Fixed-step classical RK4 integration of the adaptation equation.
std::vector<AdaptationState> adaptation_ode(const IlluminantFn& illuminant, const AdaptationParams& p,
                                            double t_end, const OdeOptions& options);

/// RK4 oracle driven by a triphasic schedule (breakpoints filled in).
std::vector<AdaptationState> adaptation_ode(const TriphasicSchedule& s, const AdaptationParams& p,
                                            OdeOptions options);

}  // namespace chroma
