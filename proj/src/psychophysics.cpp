#include "chroma/psychophysics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <boost/math/distributions/normal.hpp>

#include "chroma/parallel.hpp"

namespace chroma {

std::string to_string(Choice c) { return c == Choice::Lagging ? "lagging" : "further"; }

Choice parse_choice(const std::string& s) {
  if (s == "lagging" || s == "L") return Choice::Lagging;
  if (s == "further" || s == "F") return Choice::Further;
  throw Error(ErrorCode::InvalidArgument, "choice must be 'lagging' or 'further', got '" + s + "'");
}

namespace {

// log(1 / (1 + e^{-z})) without overflow. log(1 + e) rather than log1p(e):
// the absolute error stays below 1e-16 per term and it is much cheaper.
inline double log_sigmoid(double z) {
  return z >= 0.0 ? -std::log(1.0 + std::exp(-z)) : z - std::log(1.0 + std::exp(z));
}

const double kLogFloor = std::log(kProbabilityFloor);

// Below this logit a term may hit the probability floor.
constexpr double kFloorLogit = -27.0;

inline double floored_term(double x, bool lagging, const PsychometricParams& p, std::size_t& clamped) {
  const double z = p.k * (x - p.x0);
  const double term = log_sigmoid(lagging ? z : -z);
  if (term < kLogFloor) {
    ++clamped;
    return kLogFloor;
  }
  return term;
}

}  // namespace

double psychometric(double offset, const PsychometricParams& p) {
  return 1.0 / (1.0 + std::exp(-p.k * (offset - p.x0)));
}

double log_choice_probability(double offset, Choice choice, const PsychometricParams& p) {
  const double z = p.k * (offset - p.x0);
  return log_sigmoid(choice == Choice::Lagging ? z : -z);
}

double signed_offset(const ChromaticityUV& m, const ChromaticityUV& a, const ChromaticityUV& dir) {
  return dot(m - a, dir);
}

double calibration_log_likelihood(const std::vector<CalibrationRecord>& records, const PsychometricParams& p) {
  std::size_t clamped = 0;
  double sum = 0.0;
  for (const auto& r : records) sum += floored_term(r.m_offset, r.choice == Choice::Lagging, p, clamped);
  return sum;
}

PsychometricFit fit_psychometric(const std::vector<CalibrationRecord>& records,
                                 const PsychometricFitOptions& options) {
  if (records.size() < 2) throw Error(ErrorCode::NoData, "psychometric fit needs at least 2 calibration records");
  const double inf = std::numeric_limits<double>::infinity();
  double min_l = inf, max_l = -inf, min_f = inf, max_f = -inf;
  std::size_t n_l = 0;
  for (const auto& r : records) {
    if (!std::isfinite(r.m_offset)) throw Error(ErrorCode::InvalidArgument, "calibration offset must be finite");
    if (r.choice == Choice::Lagging) {
      ++n_l;
      min_l = std::min(min_l, r.m_offset);
      max_l = std::max(max_l, r.m_offset);
    } else {
      min_f = std::min(min_f, r.m_offset);
      max_f = std::max(max_f, r.m_offset);
    }
  }

  PsychometricFit fit;
  auto boundary = [&](double k, double x0) {
    fit.params = {k, x0};
    fit.separable = true;
    fit.converged = false;
    fit.log_likelihood = calibration_log_likelihood(records, fit.params);
    return fit;
  };
  if (n_l == records.size()) return boundary(options.k_bound, -options.x0_bound);
  if (n_l == 0) return boundary(options.k_bound, options.x0_bound);
  if (max_f <= min_l) return boundary(options.k_bound, 0.5 * (max_f + min_l));
  if (max_l <= min_f) return boundary(-options.k_bound, 0.5 * (max_l + min_f));

  // Logistic regression on the standardized offset.
  const double n = static_cast<double>(records.size());
  double mean = 0.0;
  for (const auto& r : records) mean += r.m_offset;
  mean /= n;
  double var = 0.0;
  for (const auto& r : records) var += (r.m_offset - mean) * (r.m_offset - mean);
  const double sd = std::sqrt(var / n);

  auto loglik = [&](double b0, double b1) {
    double s = 0.0;
    for (const auto& r : records) {
      const double z = b0 + b1 * (r.m_offset - mean) / sd;
      s += log_sigmoid(r.choice == Choice::Lagging ? z : -z);
    }
    return s;
  };

  double b0 = 0.0, b1 = 0.0;
  double ll = loglik(b0, b1);
  for (fit.iterations = 0; fit.iterations < options.max_iterations; ++fit.iterations) {
    double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (const auto& r : records) {
      const double x = (r.m_offset - mean) / sd;
      const double p = 1.0 / (1.0 + std::exp(-(b0 + b1 * x)));
      const double y = r.choice == Choice::Lagging ? 1.0 : 0.0;
      const double w = p * (1.0 - p);
      g0 += y - p;
      g1 += (y - p) * x;
      h00 += w;
      h01 += w * x;
      h11 += w * x * x;
    }
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 0.0)) break;
    const double d0 = (h11 * g0 - h01 * g1) / det;
    const double d1 = (h00 * g1 - h01 * g0) / det;
    double step = 1.0;
    double next = loglik(b0 + d0, b1 + d1);
    while (next < ll && step > 1e-10) {
      step *= 0.5;
      next = loglik(b0 + step * d0, b1 + step * d1);
    }
    b0 += step * d0;
    b1 += step * d1;
    const bool small = std::abs(step * d0) < 1e-12 * (1.0 + std::abs(b0)) &&
                       std::abs(step * d1) < 1e-12 * (1.0 + std::abs(b1));
    ll = next;
    if (small) {
      fit.converged = true;
      break;
    }
  }
  const double k = b1 / sd;
  fit.params = {k, b1 != 0.0 ? mean - b0 * sd / b1 : 0.0};
  if (!std::isfinite(fit.params.k) || std::abs(fit.params.k) > options.k_bound) {
    return boundary(std::copysign(options.k_bound, k), fit.params.x0);
  }
  fit.log_likelihood = calibration_log_likelihood(records, fit.params);
  return fit;
}

namespace {

struct Observation {
  double c;  // midpoint offset from D65 along the run direction
  double t;
  bool lagging;
  std::size_t key;  // index into the distinct (schedule timing, t) pairs
};

struct OffsetKey {
  double v, D, t1, t2, t;
  auto operator<=>(const OffsetKey&) const = default;
};

struct Observations {
  std::vector<Observation> items;
  std::vector<OffsetKey> keys;
  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

Observations observations(const std::vector<MeasurementRun>& runs) {
  Observations obs;
  std::map<OffsetKey, std::size_t> index;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& s = runs[r].schedule;
    const ChromaticityUV dir = s.direction();
    for (const auto& tr : runs[r].trials) {
      if (!(tr.t >= 0.0 && tr.t <= s.duration())) {
        throw Error(ErrorCode::OutOfRange, "trial time lies outside its schedule");
      }
      const OffsetKey key{s.v, s.D, s.t1, s.t2, tr.t};
      const auto [it, added] = index.try_emplace(key, obs.keys.size());
      if (added) obs.keys.push_back(key);
      obs.items.push_back({signed_offset(tr.midpoint, s.trajectory.origin(), dir), tr.t,
                           tr.choice == Choice::Lagging, it->second});
    }
  }
  return obs;
}

void unit_offsets(const Observations& obs, double k1, std::vector<double>& b) {
  std::vector<double> per_key(obs.keys.size());
  for (std::size_t k = 0; k < obs.keys.size(); ++k) {
    const OffsetKey& key = obs.keys[k];
    TriphasicSchedule s;
    s.v = key.v;
    s.D = key.D;
    s.t1 = key.t1;
    s.t2 = key.t2;
    per_key[k] = adaptation_unit_offset(s, k1, key.t);
  }
  b.resize(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) b[i] = per_key[obs.items[i].key];
}

inline double sum_terms(const Observations& obs, const std::vector<double>& b, double k2,
                        const PsychometricParams& psy, std::size_t& clamped) {
  double sum = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) sum += floored_term(obs.items[i].c - k2 * b[i], obs.items[i].lagging, psy, clamped);
  return sum;
}

}  // namespace

LogLikelihood log_likelihood(const std::vector<MeasurementRun>& runs, const AdaptationParams& p_adapt,
                             const PsychometricParams& p_psy) {
  p_adapt.validate();
  for (const auto& r : runs) r.schedule.validate();
  const auto obs = observations(runs);
  std::vector<double> b;
  unit_offsets(obs, p_adapt.k1, b);
  LogLikelihood out;
  out.value = sum_terms(obs, b, p_adapt.k2, p_psy, out.clamped);
  return out;
}

LogLikelihood log_likelihood(const std::vector<TrialRecord>& trials, const TriphasicSchedule& s,
                             const AdaptationParams& p_adapt, const PsychometricParams& p_psy) {
  return log_likelihood(std::vector<MeasurementRun>{{s, trials}}, p_adapt, p_psy);
}

void FitGrid::validate() const {
  if (!(k1_step > 0.0) || !(k2_step > 0.0) || k1_count < 1 || k2_count < 2) {
    throw Error(ErrorCode::InvalidArgument, "fit grid needs positive steps, >= 1 k1 value and >= 2 k2 values");
  }
  if (k2_at(k2_count - 1) > 1.0 + 1e-12) throw Error(ErrorCode::InvalidArgument, "fit grid exceeds k2 = 1");
}

namespace {

// Log-likelihood along k2 for one k1. The likelihood is concave in k2
// unless a term can reach the probability floor, in which case the row is
// scanned exhaustively.
class Row {
 public:
  Row(const Observations& obs, const FitGrid& grid, const PsychometricParams& psy, int k1_index)
      : obs_(obs), grid_(grid), psy_(psy) {
    unit_offsets(obs, grid.k1_at(k1_index), b_);
    const double k2_max = grid.k2_at(grid.k2_count - 1);
    for (std::size_t i = 0; i < obs.size() && concave_; ++i) {
      for (double k2 : {0.0, k2_max}) {
        const double z = psy.k * (obs.items[i].c - k2 * b_[i] - psy.x0);
        if ((obs.items[i].lagging ? z : -z) < kFloorLogit) concave_ = false;
      }
    }
    if (!concave_) {
      full_.resize(static_cast<std::size_t>(grid.k2_count));
      for (int j = 0; j < grid.k2_count; ++j) full_[static_cast<std::size_t>(j)] = eval(j);
    } else {
      memo_.assign(static_cast<std::size_t>(grid.k2_count), std::numeric_limits<double>::quiet_NaN());
    }
  }

  double at(int j) {
    if (!concave_) return full_[static_cast<std::size_t>(j)];
    double& v = memo_[static_cast<std::size_t>(j)];
    if (std::isnan(v)) v = eval(j);
    return v;
  }

  // Smallest maximizing index; `hint` seeds a galloping search.
  int argmax(int hint) {
    const int n = grid_.k2_count;
    if (!concave_) {
      int best = 0;
      for (int j = 1; j < n; ++j) {
        if (full_[static_cast<std::size_t>(j)] > full_[static_cast<std::size_t>(best)]) best = j;
      }
      return best;
    }
    // pred(j): LL(j+1) <= LL(j), monotone for a concave row; answer is the
    // first j where it holds (n - 1 when it never does).
    auto pred = [&](int j) { return at(j + 1) <= at(j); };
    const int last = n - 2;
    int h = std::clamp(hint, 0, last);
    int lo, hi;
    if (pred(h)) {
      hi = h;
      lo = -1;
      for (int step = 1;; step *= 2) {
        const int x = hi - step;
        if (x < 0) break;
        if (pred(x)) {
          hi = x;
        } else {
          lo = x;
          break;
        }
      }
    } else {
      lo = h;
      hi = n - 1;
      for (int step = 1;; step *= 2) {
        const int x = lo + step;
        if (x > last) break;
        if (pred(x)) {
          hi = x;
          break;
        }
        lo = x;
      }
    }
    while (hi - lo > 1) {
      const int mid = lo + (hi - lo) / 2;
      if (pred(mid)) hi = mid;
      else lo = mid;
    }
    return hi;
  }

  // Extent of {j : LL(j) >= level} around the argmax `peak`. The hints are
  // guesses for the two ends, typically from the neighbouring k1 row.
  std::pair<int, int> superlevel(int peak, double level, int hint_lo, int hint_hi) {
    const int n = grid_.k2_count;
    if (!concave_) {
      int lo = peak, hi = peak;
      for (int j = 0; j < n; ++j) {
        if (full_[static_cast<std::size_t>(j)] >= level) {
          lo = std::min(lo, j);
          hi = std::max(hi, j);
        }
      }
      return {lo, hi};
    }
    auto inside = [&](int j) { return at(j) >= level; };
    // Lower end: bracket with at(a) < level (a = -1 is virtual), at(b) >= level.
    int a = -1, b = peak;
    const int g = std::clamp(hint_lo, 0, peak);
    if (inside(g)) {
      b = g;
      for (int step = 1; b - step >= 0; step *= 2) {
        if (!inside(b - step)) {
          a = b - step;
          break;
        }
        b -= step;
      }
    } else {
      a = g;
      for (int step = 1; a + step < peak; step *= 2) {
        if (inside(a + step)) {
          b = a + step;
          break;
        }
        a += step;
      }
    }
    while (b - a > 1) {
      const int mid = a + (b - a) / 2;
      if (inside(mid)) b = mid;
      else a = mid;
    }
    const int lo = b;
    // Upper end: at(c) >= level, at(d) < level (d = n is virtual).
    int c = peak, d = n;
    const int h = std::clamp(hint_hi, peak, n - 1);
    if (inside(h)) {
      c = h;
      for (int step = 1; c + step < n; step *= 2) {
        if (!inside(c + step)) {
          d = c + step;
          break;
        }
        c += step;
      }
    } else {
      d = h;
      for (int step = 1; d - step > peak; step *= 2) {
        if (inside(d - step)) {
          c = d - step;
          break;
        }
        d -= step;
      }
    }
    while (d - c > 1) {
      const int mid = c + (d - c) / 2;
      if (inside(mid)) c = mid;
      else d = mid;
    }
    return {lo, c};
  }

 private:
  double eval(int j) {
    std::size_t clamped = 0;
    return sum_terms(obs_, b_, grid_.k2_at(j), psy_, clamped);
  }

  const Observations& obs_;
  const FitGrid& grid_;
  const PsychometricParams& psy_;
  std::vector<double> b_;
  bool concave_ = true;
  std::vector<double> full_;
  std::vector<double> memo_;
};

constexpr int kBlock = 64;

struct Profile {
  std::vector<int> argmax;      // per k1 index
  std::vector<double> maximum;  // NaN outside the searched range
};

void profile_range(const Observations& obs, const FitGrid& grid,
                   const PsychometricParams& psy, int first, int last, unsigned threads, Profile& prof) {
  const int blocks = (last - first + kBlock) / kBlock;
  parallel_for(static_cast<std::size_t>(blocks), threads, [&](std::size_t blk) {
    const int begin = first + static_cast<int>(blk) * kBlock;
    const int end = std::min(last + 1, begin + kBlock);
    int hint = grid.k2_count / 2;
    for (int i = begin; i < end; ++i) {
      Row row(obs, grid, psy, i);
      const int j = row.argmax(hint);
      prof.argmax[static_cast<std::size_t>(i)] = j;
      prof.maximum[static_cast<std::size_t>(i)] = row.at(j);
      hint = j;
    }
  });
}

}  // namespace

FitResult fit_adaptation(const std::vector<MeasurementRun>& runs, const PsychometricParams& p_psy,
                         const FitOptions& options) {
  const FitGrid& grid = options.grid;
  grid.validate();
  if (!std::isfinite(p_psy.k) || !std::isfinite(p_psy.x0)) {
    throw Error(ErrorCode::InvalidArgument, "psychometric parameters must be finite");
  }
  for (const auto& r : runs) r.schedule.validate();
  const auto obs = observations(runs);

  FitResult result;
  result.trial_count = obs.size();
  if (obs.empty()) {
    result.no_fit = true;
    result.flat = true;
    result.ci_k1 = {grid.k1_at(0), grid.k1_at(grid.k1_count - 1)};
    result.ci_k2 = {grid.k2_at(0), grid.k2_at(grid.k2_count - 1)};
    result.ci_k1_censored = result.ci_k2_censored = true;
    return result;
  }

  Profile prof;
  prof.argmax.assign(static_cast<std::size_t>(grid.k1_count), -1);
  prof.maximum.assign(static_cast<std::size_t>(grid.k1_count), std::numeric_limits<double>::quiet_NaN());

  int first = 0, last = grid.k1_count - 1;
  if (options.warm_start_k1) {
    int w = std::max(1, options.warm_window);
    const int c = std::clamp(*options.warm_start_k1, 0, grid.k1_count - 1);
    first = std::max(0, c - w);
    last = std::min(grid.k1_count - 1, c + w);
    profile_range(obs, grid, p_psy, first, last, options.threads, prof);
    while (true) {
      int best = first;
      for (int i = first; i <= last; ++i) {
        if (prof.maximum[static_cast<std::size_t>(i)] > prof.maximum[static_cast<std::size_t>(best)]) best = i;
      }
      const bool edge_lo = best == first && first > 0;
      const bool edge_hi = best == last && last < grid.k1_count - 1;
      if (!edge_lo && !edge_hi) break;
      w *= 2;
      const int nf = std::max(0, best - w), nl = std::min(grid.k1_count - 1, best + w);
      if (nf < first) profile_range(obs, grid, p_psy, nf, first - 1, options.threads, prof);
      if (nl > last) profile_range(obs, grid, p_psy, last + 1, nl, options.threads, prof);
      first = std::min(first, nf);
      last = std::max(last, nl);
    }
  } else {
    profile_range(obs, grid, p_psy, first, last, options.threads, prof);
  }

  int best = first;
  for (int i = first; i <= last; ++i) {
    if (prof.maximum[static_cast<std::size_t>(i)] > prof.maximum[static_cast<std::size_t>(best)]) best = i;
  }
  result.k1_index = best;
  result.k2_index = prof.argmax[static_cast<std::size_t>(best)];
  result.params = {grid.k1_at(result.k1_index), grid.k2_at(result.k2_index)};
  const LogLikelihood ll = log_likelihood(runs, result.params, p_psy);
  result.log_likelihood = ll.value;
  result.clamped = ll.clamped;

  if (options.confidence_intervals && !options.warm_start_k1) {
    const double level = prof.maximum[static_cast<std::size_t>(best)] - kProfileThreshold;
    int k1_lo = best, k1_hi = best;
    std::vector<int> inside;
    for (int i = 0; i < grid.k1_count; ++i) {
      if (prof.maximum[static_cast<std::size_t>(i)] >= level) {
        k1_lo = std::min(k1_lo, i);
        k1_hi = std::max(k1_hi, i);
        inside.push_back(i);
      }
    }
    std::vector<std::pair<int, int>> spans(inside.size());
    const std::size_t blocks = (inside.size() + kBlock - 1) / kBlock;
    parallel_for(blocks, options.threads, [&](std::size_t blk) {
      const std::size_t end = std::min(inside.size(), (blk + 1) * kBlock);
      for (std::size_t n = blk * kBlock; n < end; ++n) {
        const int i = inside[n];
        const int peak = prof.argmax[static_cast<std::size_t>(i)];
        Row row(obs, grid, p_psy, i);
        const auto hint = n > blk * kBlock ? spans[n - 1] : std::pair{peak, peak};
        spans[n] = row.superlevel(peak, level, hint.first, hint.second);
      }
    });
    int k2_lo = result.k2_index, k2_hi = result.k2_index;
    for (const auto& [lo, hi] : spans) {
      k2_lo = std::min(k2_lo, lo);
      k2_hi = std::max(k2_hi, hi);
    }
    result.has_ci = true;
    result.ci_k1 = {grid.k1_at(k1_lo), grid.k1_at(k1_hi)};
    result.ci_k2 = {grid.k2_at(k2_lo), grid.k2_at(k2_hi)};
    result.ci_k1_censored = k1_lo == 0 || k1_hi == grid.k1_count - 1;
    result.ci_k2_censored = k2_lo == 0 || k2_hi == grid.k2_count - 1;
    result.flat = k1_lo == 0 && k1_hi == grid.k1_count - 1 && k2_lo == 0 && k2_hi == grid.k2_count - 1;
  }
  return result;
}

FitResult fit_adaptation(const std::vector<TrialRecord>& trials, const TriphasicSchedule& s,
                         const PsychometricParams& p_psy, const FitOptions& options) {
  return fit_adaptation(std::vector<MeasurementRun>{{s, trials}}, p_psy, options);
}

bool stimulus_in_gamut(const ChromaticityUV& c, double luminance) {
  if (!(c.v > 0.0)) return false;
  const XYZ x = uv_xyz(c, luminance);
  return in_gamut(xyz_rgb(x));
}

StimulusPair place_stimuli(const ChromaticityUV& a_hat, const ChromaticityUV& dir, std::mt19937_64& rng,
                           const PlacementOptions& options) {
  if (std::abs(norm(dir) - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "placement direction must be a unit vector");
  if (!(options.sigma >= 0.0) || !(options.separation > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "placement needs sigma >= 0 and a positive separation");
  }
  const double half = 0.5 * options.separation;
  auto make = [&](const ChromaticityUV& m) {
    StimulusPair p;
    p.midpoint = m;
    p.further = m + half * dir;
    p.lagging = m - half * dir;
    return p;
  };
  auto fits = [&](const StimulusPair& p) {
    return stimulus_in_gamut(p.further, options.luminance) && stimulus_in_gamut(p.lagging, options.luminance);
  };

  std::normal_distribution<double> jitter(0.0, options.sigma > 0.0 ? options.sigma : 1.0);
  StimulusPair pair;
  for (int attempt = 0; attempt <= options.max_resamples; ++attempt) {
    const double e = options.sigma > 0.0 ? jitter(rng) : 0.0;
    pair = make(a_hat + e * dir);
    pair.resamples = attempt;
    if (fits(pair)) return pair;
  }
  // Pull the midpoint toward D65 until both patches are displayable.
  const ChromaticityUV d65 = d65_uv();
  const ChromaticityUV m = pair.midpoint;
  double ok = 0.0, bad = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (ok + bad);
    if (fits(make(d65 + mid * (m - d65)))) ok = mid;
    else bad = mid;
  }
  const int resamples = pair.resamples;
  pair = make(d65 + ok * (m - d65));
  pair.resamples = resamples;
  pair.clamped = true;
  return pair;
}

std::vector<TrialRecord> simulate_observer(const AdaptationParams& truth, const PsychometricParams& p_psy,
                                           const TriphasicSchedule& s, std::mt19937_64& rng,
                                           const SimulationOptions& options) {
  truth.validate();
  s.validate();
  if (!(options.interval > 0.0)) throw Error(ErrorCode::InvalidArgument, "stimulus interval must be positive");
  std::vector<double> times;
  for (int k = 0;; ++k) {
    const double t = options.interval * k;
    if (!(t < s.duration())) break;
    times.push_back(t);
  }
  OdeOptions ode;
  ode.dt = options.ode_dt;
  ode.sample_times = times;
  const auto states = adaptation_ode(s, truth, ode);
  const ChromaticityUV dir = s.direction();
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<TrialRecord> out;
  out.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const ChromaticityUV a_hat = adaptation_closed_form(s, options.predictor, times[i]);
    const StimulusPair pair = place_stimuli(a_hat, dir, rng, options.placement);
    const double p = psychometric(signed_offset(pair.midpoint, states[i].value, dir), p_psy);
    TrialRecord r;
    r.t = times[i];
    r.further = pair.further;
    r.lagging = pair.lagging;
    r.midpoint = pair.midpoint;
    r.choice = unit(rng) < p ? Choice::Lagging : Choice::Further;
    out.push_back(r);
  }
  return out;
}

std::vector<CalibrationRecord> simulate_calibration(const PsychometricParams& p_psy, int count, double sigma,
                                                    std::mt19937_64& rng) {
  if (count < 0 || !(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "calibration needs count >= 0 and sigma > 0");
  std::normal_distribution<double> offset(0.0, sigma);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<CalibrationRecord> out;
  for (int i = 0; i < count; ++i) {
    CalibrationRecord r;
    r.m_offset = offset(rng);
    r.choice = unit(rng) < psychometric(r.m_offset, p_psy) ? Choice::Lagging : Choice::Further;
    out.push_back(r);
  }
  return out;
}

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::OutOfRange, "normal quantile needs p in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double d_prime(double hit_rate, double fa_rate) {
  return inverse_normal_cdf(hit_rate) - inverse_normal_cdf(fa_rate);
}

SdtResult sdt_from_counts(std::size_t hits, std::size_t signal_trials, std::size_t false_alarms,
                          std::size_t noise_trials) {
  if (signal_trials == 0 || noise_trials == 0) {
    throw Error(ErrorCode::NoData, "d' needs at least one signal and one noise trial");
  }
  if (hits > signal_trials || false_alarms > noise_trials) {
    throw Error(ErrorCode::InvalidArgument, "more responses than trials");
  }
  SdtResult r;
  r.hits = hits;
  r.misses = signal_trials - hits;
  r.false_alarms = false_alarms;
  r.correct_rejections = noise_trials - false_alarms;
  auto rate = [&r](std::size_t k, std::size_t n) {
    const double half = 0.5 / static_cast<double>(n);
    if (k == 0) {
      r.corrected = true;
      return half;
    }
    if (k == n) {
      r.corrected = true;
      return 1.0 - half;
    }
    return static_cast<double>(k) / static_cast<double>(n);
  };
  r.hit_rate = rate(hits, signal_trials);
  r.fa_rate = rate(false_alarms, noise_trials);
  r.d_prime = d_prime(r.hit_rate, r.fa_rate);
  return r;
}

std::vector<SdtResult> sdt_analysis(const std::vector<SdtRecord>& records) {
  struct Tally {
    std::size_t hits = 0, signal = 0, fas = 0, noise = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, Tally> tallies;
  for (const auto& r : records) {
    auto [it, inserted] = tallies.try_emplace(r.condition);
    if (inserted) order.push_back(r.condition);
    Tally& t = it->second;
    if (r.signal) {
      ++t.signal;
      t.hits += r.response ? 1 : 0;
    } else {
      ++t.noise;
      t.fas += r.response ? 1 : 0;
    }
  }
  std::vector<SdtResult> out;
  for (const auto& name : order) {
    const Tally& t = tallies[name];
    SdtResult r = sdt_from_counts(t.hits, t.signal, t.fas, t.noise);
    r.condition = name;
    out.push_back(r);
  }
  return out;
}

std::vector<RocPoint> roc_curve(double dp, int points) {
  if (points < 2) throw Error(ErrorCode::InvalidArgument, "ROC curve needs at least 2 points");
  const boost::math::normal_distribution<double> normal;
  std::vector<RocPoint> out;
  for (int i = 0; i < points; ++i) {
    const double fa = static_cast<double>(i) / (points - 1);
    double hit = fa;
    if (fa > 0.0 && fa < 1.0) hit = boost::math::cdf(normal, dp + boost::math::quantile(normal, fa));
    out.push_back({fa, hit});
  }
  return out;
}

}  // namespace chroma
