#include "chroma/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "chroma/daylight.hpp"

namespace chroma {

void AdaptationParams::validate() const {
  if (!(k1 > 0.0) || !std::isfinite(k1)) throw Error(ErrorCode::InvalidArgument, "k1 must be positive");
  if (!(k2 >= 0.0 && k2 <= 1.0)) throw Error(ErrorCode::InvalidArgument, "k2 must lie in [0, 1]");
}

Trajectory Trajectory::linear(double phi) {
  if (!std::isfinite(phi)) throw Error(ErrorCode::InvalidArgument, "trajectory angle must be finite");
  return Trajectory(Kind::Linear, phi);
}

Trajectory Trajectory::daylight() { return Trajectory(Kind::Daylight, 0.0); }

ChromaticityUV Trajectory::point_at(double distance) const {
  if (kind_ == Kind::Daylight) return daylight_locus(distance);
  return origin() + distance * dir_;
}

ChromaticityUV Trajectory::direction(double distance) const {
  if (kind_ == Kind::Linear) return dir_;
  const double d = distance > 1e-6 ? distance : 1e-6;
  const ChromaticityUV chord = point_at(d) - origin();
  return (1.0 / norm(chord)) * chord;
}

double Trajectory::max_distance() const {
  if (kind_ == Kind::Daylight) return daylight_arc_max();
  return std::numeric_limits<double>::infinity();
}

std::string Trajectory::label() const {
  if (kind_ == Kind::Daylight) return "daylight";
  char buf[32];
  std::snprintf(buf, sizeof buf, "linear@%.3f", phi_);
  return buf;
}

void TriphasicSchedule::validate() const {
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "schedule velocity must be positive");
  if (!(D > 0.0) || !std::isfinite(D)) throw Error(ErrorCode::InvalidArgument, "schedule distance D must be positive");
  if (!(t1 >= 0.0) || !(t2 >= 0.0) || !std::isfinite(t1) || !std::isfinite(t2)) {
    throw Error(ErrorCode::InvalidArgument, "hold and return durations must be non-negative");
  }
  if (D > trajectory.max_distance()) {
    throw Error(ErrorCode::OutOfRange, "schedule distance exceeds the trajectory's defined range");
  }
}

void DeploymentSchedule::validate() const {
  if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "deployment velocity must be >= 0");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw Error(ErrorCode::InvalidArgument, "t_max must be positive");
  if (terminal_distance() > trajectory.max_distance()) {
    throw Error(ErrorCode::OutOfRange, "terminal illuminant lies beyond the trajectory's defined range");
  }
}

ChromaticityUV DeploymentSchedule::illuminant_at(double t) const {
  if (!(t >= 0.0)) throw Error(ErrorCode::OutOfRange, "time must be non-negative");
  return trajectory.point_at(v * std::min(t, t_max));
}

ChromaticityUV illuminant_at(const TriphasicSchedule& s, double t) {
  if (!(t >= 0.0 && t <= s.duration())) {
    throw Error(ErrorCode::OutOfRange, "time outside the schedule");
  }
  if (t < s.ramp_end()) return s.trajectory.point_at(s.v * t);
  if (t < s.hold_end()) return s.trajectory.point_at(s.D);
  return s.trajectory.origin();
}

double adaptation_unit_offset(const TriphasicSchedule& s, double k1, double t) {
  const double ramp_end = s.ramp_end();
  // v (t - (1 - e^{-k1 t}) / k1), written with expm1 for small k1 t.
  if (t <= ramp_end) return s.v * (t + std::expm1(-k1 * t) / k1);
  // Offset of the state below the hold level at the end of the ramp.
  const double lag = s.v * std::expm1(-k1 * ramp_end) / k1;
  if (t < s.hold_end()) return s.D + lag * std::exp(-k1 * (t - ramp_end));
  const double at_return = s.D + lag * std::exp(-k1 * s.t1);
  return at_return * std::exp(-k1 * (t - s.hold_end()));
}

double adaptation_offset(const TriphasicSchedule& s, const AdaptationParams& p, double t) {
  return p.k2 * adaptation_unit_offset(s, p.k1, t);
}

ChromaticityUV adaptation_closed_form(const TriphasicSchedule& s, const AdaptationParams& p, double t) {
  return s.trajectory.origin() + adaptation_offset(s, p, t) * s.direction();
}

std::vector<AdaptationState> adaptation_ode(const IlluminantFn& illuminant, const AdaptationParams& p,
                                            double t_end, const OdeOptions& options) {
  p.validate();
  if (!(options.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "ODE step must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw Error(ErrorCode::InvalidArgument, "t_end must be finite and >= 0");
  if (!std::is_sorted(options.sample_times.begin(), options.sample_times.end())) {
    throw Error(ErrorCode::InvalidArgument, "sample times must be sorted");
  }
  if (!options.sample_times.empty() &&
      (options.sample_times.front() < 0.0 || options.sample_times.back() > t_end)) {
    throw Error(ErrorCode::OutOfRange, "sample times must lie in [0, t_end]");
  }

  std::vector<double> breaks{0.0};
  for (double b : options.breakpoints) {
    if (b > 0.0 && b < t_end) breaks.push_back(b);
  }
  breaks.push_back(t_end);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const ChromaticityUV origin = d65_uv();
  const bool every_step = options.sample_times.empty();
  std::vector<AdaptationState> out;
  if (every_step) out.reserve(static_cast<std::size_t>(t_end / options.dt) + breaks.size() + 2);
  else out.reserve(options.sample_times.size());

  ChromaticityUV y = options.initial - origin;
  std::size_t next_sample = 0;
  auto emit = [&](double t) {
    if (every_step) {
      out.push_back({t, origin + y});
      return;
    }
    while (next_sample < options.sample_times.size() && options.sample_times[next_sample] == t) {
      out.push_back({t, origin + y});
      ++next_sample;
    }
  };

  emit(0.0);
  for (std::size_t seg = 0; seg + 1 < breaks.size(); ++seg) {
    const double seg_start = breaks[seg];
    const double seg_end = breaks[seg + 1];
    const double left_of_end = std::nextafter(seg_end, seg_start);
    auto drive = [&](double tau) {
      const ChromaticityUV a = illuminant(tau >= seg_end ? left_of_end : tau);
      if (!std::isfinite(a.u) || !std::isfinite(a.v)) {
        throw Error(ErrorCode::InvalidArgument, "illuminant sample is not finite");
      }
      return a - origin;
    };
    auto rhs = [&](double tau, ChromaticityUV state) {
      return p.k1 * (p.k2 * drive(tau) - state);
    };

    double t = seg_start;
    while (t < seg_end) {
      double stop = seg_end;
      if (!every_step) {
        while (next_sample < options.sample_times.size() && options.sample_times[next_sample] <= t) {
          ++next_sample;  // already emitted or before this segment
        }
        if (next_sample < options.sample_times.size() && options.sample_times[next_sample] < stop) {
          stop = options.sample_times[next_sample];
        }
      }
      const auto steps = static_cast<long>(std::ceil((stop - t) / options.dt - 1e-9));
      const long n = std::max(1L, steps);
      const double h = (stop - t) / static_cast<double>(n);
      const double start = t;
      for (long i = 0; i < n; ++i) {
        const double t0 = start + h * static_cast<double>(i);
        const double t1 = (i + 1 == n) ? stop : start + h * static_cast<double>(i + 1);
        const double hh = t1 - t0;
        const ChromaticityUV s1 = rhs(t0, y);
        const ChromaticityUV s2 = rhs(t0 + 0.5 * hh, y + (0.5 * hh) * s1);
        const ChromaticityUV s3 = rhs(t0 + 0.5 * hh, y + (0.5 * hh) * s2);
        const ChromaticityUV s4 = rhs(t1, y + hh * s3);
        y = y + (hh / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
        if (every_step || i + 1 == n) emit(t1);
      }
      t = stop;
    }
  }
  return out;
}

std::vector<AdaptationState> adaptation_ode(const TriphasicSchedule& s, const AdaptationParams& p,
                                            OdeOptions options) {
  s.validate();
  options.breakpoints = s.breakpoints();
  return adaptation_ode([&s](double t) { return illuminant_at(s, std::min(t, s.duration())); }, p,
                        s.duration(), options);
}

}  // namespace chroma
