#include "chroma/daylight.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace chroma {
namespace {

constexpr double kCctMin = 4000.0;
constexpr double kCctMax = 25000.0;

double daylight_x(double t) {
  if (t <= 7000.0) {
    return -4.6070e9 / (t * t * t) + 2.9678e6 / (t * t) + 0.09911e3 / t + 0.244063;
  }
  return -2.0064e9 / (t * t * t) + 1.9018e6 / (t * t) + 0.24748e3 / t + 0.237040;
}

double daylight_y(double x) { return -3.000 * x * x + 2.870 * x - 0.275; }

ChromaticityUV xy_to_uv(double x, double y) {
  const double den = -2.0 * x + 12.0 * y + 3.0;
  return {4.0 * x / den, 9.0 * y / den};
}

ChromaticityUV curve(double x) { return xy_to_uv(x, daylight_y(x)); }

// |d(u',v')/dx| along the quadratic locus.
double speed(double x) {
  const double y = daylight_y(x);
  const double dy = -6.0 * x + 2.870;
  const double den = -2.0 * x + 12.0 * y + 3.0;
  const double dden = -2.0 + 12.0 * dy;
  const double du = (4.0 * den - 4.0 * x * dden) / (den * den);
  const double dv = (9.0 * dy * den - 9.0 * y * dden) / (den * den);
  return std::hypot(du, dv);
}

double gauss_legendre(double a, double b) {
  static constexpr std::array<double, 5> nodes{0.0, -0.5384693101056831, 0.5384693101056831,
                                               -0.9061798459386640, 0.9061798459386640};
  static constexpr std::array<double, 5> weights{0.5688888888888889, 0.4786286704993665,
                                                 0.4786286704993665, 0.2369268850561891,
                                                 0.2369268850561891};
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * speed(mid + half * nodes[i]);
  return s * half;
}

class Locus {
 public:
  Locus() {
    x_lo_ = daylight_x(kCctMax);
    x_hi_ = daylight_x(kCctMin);
    const ChromaticityUV target = d65_uv();
    // Foot of the perpendicular from D65 onto the curve.
    double a = daylight_x(7500.0);
    double b = daylight_x(5500.0);
    for (int i = 0; i < 200; ++i) {
      const double m1 = a + (b - a) / 3.0;
      const double m2 = b - (b - a) / 3.0;
      if (distance(curve(m1), target) < distance(curve(m2), target)) {
        b = m2;
      } else {
        a = m1;
      }
    }
    x0_ = 0.5 * (a + b);
    offset_ = target - curve(x0_);

    step_ = (x_hi_ - x_lo_) / kPanels;
    cumulative_.assign(kPanels + 1, 0.0);
    for (int i = 0; i < kPanels; ++i) {
      cumulative_[i + 1] = cumulative_[i] + gauss_legendre(node(i), node(i + 1));
    }
    arc_at_x0_ = raw_arc(x0_);

    arc_lo_ = arc_of(x_lo_);
    arc_hi_ = arc_of(x_hi_);
    const double lo = arc_lo_;
    arc_step_ = (arc_hi_ - lo) / (kArcNodes - 1);
    table_x_.resize(kArcNodes);
    table_dx_.resize(kArcNodes);
    for (int k = 0; k < kArcNodes; ++k) {
      table_x_[k] = solve_x(lo + arc_step_ * k);
      table_dx_[k] = 1.0 / speed(table_x_[k]);
    }
  }

  double arc_of(double x) const { return raw_arc(x) - arc_at_x0_; }

  double arc_max() const { return arc_hi_; }
  double arc_min() const { return arc_lo_; }

  ChromaticityUV at(double arc) const {
    if (!std::isfinite(arc)) throw Error(ErrorCode::InvalidArgument, "daylight arc must be finite");
    if (arc == 0.0) return d65_uv();
    const double lo = arc_min();
    const double hi = arc_max();
    if (arc < lo || arc > hi) {
      throw Error(ErrorCode::OutOfRange,
                  "daylight arc " + std::to_string(arc) + " outside the D-series range [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    // Cubic Hermite on a uniform arc table; nodes carry x and dx/ds.
    const double pos = (arc - lo) / arc_step_;
    const int k = std::clamp(static_cast<int>(pos), 0, kArcNodes - 2);
    const double h = arc_step_, u = pos - k;
    const double u2 = u * u, u3 = u2 * u;
    double x = (2.0 * u3 - 3.0 * u2 + 1.0) * table_x_[k] + (u3 - 2.0 * u2 + u) * h * table_dx_[k] +
               (-2.0 * u3 + 3.0 * u2) * table_x_[k + 1] + (u3 - u2) * h * table_dx_[k + 1];
    x = std::clamp(x, x_lo_, x_hi_);
    return curve(x) + offset_;
  }

 private:
  static constexpr int kPanels = 4096;
  static constexpr int kArcNodes = 8192;

  // Newton on the quadrature arc length; used to build the table.
  double solve_x(double arc) const {
    const double raw = arc + arc_at_x0_;
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), raw);
    const int panel = std::clamp(static_cast<int>(it - cumulative_.begin()) - 1, 0, kPanels - 1);
    double x = node(panel) + (raw - cumulative_[panel]) / speed(node(panel));
    for (int i = 0; i < 30; ++i) {
      const double dx = (raw_arc(x) - raw) / speed(x);
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    return std::clamp(x, x_lo_, x_hi_);
  }

  double node(int i) const { return x_lo_ + step_ * i; }

  double raw_arc(double x) const {
    const double pos = (x - x_lo_) / step_;
    int panel = static_cast<int>(std::floor(pos));
    panel = std::clamp(panel, 0, kPanels - 1);
    return cumulative_[panel] + gauss_legendre(node(panel), x);
  }

  double x_lo_ = 0.0;
  double x_hi_ = 0.0;
  double x0_ = 0.0;
  double step_ = 0.0;
  double arc_at_x0_ = 0.0;
  ChromaticityUV offset_;
  std::vector<double> cumulative_;
  double arc_lo_ = 0.0;
  double arc_hi_ = 0.0;
  double arc_step_ = 0.0;
  std::vector<double> table_x_;
  std::vector<double> table_dx_;
};

const Locus& locus() {
  static const Locus l;
  return l;
}

}  // namespace

ChromaticityUV daylight_cct_uv(double cct) {
  if (!(cct >= kCctMin && cct <= kCctMax)) {
    throw Error(ErrorCode::OutOfRange, "CCT outside the D-series range [4000, 25000] K");
  }
  const double x = daylight_x(cct);
  return xy_to_uv(x, daylight_y(x));
}

ChromaticityUV daylight_locus(double arc) { return locus().at(arc); }
double daylight_arc_max() { return locus().arc_max(); }
double daylight_arc_min() { return locus().arc_min(); }

}  // namespace chroma
