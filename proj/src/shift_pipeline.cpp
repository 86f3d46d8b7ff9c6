#include "chroma/shift_pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

#include "chroma/parallel.hpp"

namespace chroma {
namespace fs = std::filesystem;

CatMatrix frame_cat(const DeploymentSchedule& s, double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::OutOfRange, "frame time must be non-negative");
  return cat_from_d65(s.illuminant_at(t));
}

ShiftedFrame shift_frame(const Image& img, const CatMatrix& m, ClipPolicy clip, const DisplayPowerParams& params) {
  ShiftedFrame out;
  out.image = img;
  const std::size_t n = img.pixel_count();
  if (n == 0) return out;
  double power = 0.0;
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const LinearRGB adapted = apply_cat(srgb_decode(img.at(i)), m);
    bool was_clipped = false;
    const LinearRGB c = clip_color(adapted, clip, &was_clipped);
    clipped += was_clipped ? 1 : 0;
    power += pixel_power(c, params);
    out.image.set(i, srgb_encode(c));
  }
  out.power = power / static_cast<double>(n);
  out.clip_fraction = static_cast<double>(clipped) / static_cast<double>(n);
  return out;
}

Image apply_shift_image(const Image& img, const CatMatrix& m, ClipPolicy clip) {
  return shift_frame(img, m, clip, DisplayPowerParams{}).image;
}

double frame_power(const Image& img, const DisplayPowerParams& params) {
  const std::size_t n = img.pixel_count();
  if (n == 0) return 0.0;
  double power = 0.0;
  for (std::size_t i = 0; i < n; ++i) power += pixel_power(srgb_decode(img.at(i)), params);
  return power / static_cast<double>(n);
}

namespace {

std::optional<long> trailing_number(const fs::path& p) {
  const std::string stem = p.stem().string();
  std::size_t end = stem.size(), begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
  if (begin == end) return std::nullopt;
  return std::stol(stem.substr(begin, end - begin));
}

void check_gaps(const std::vector<fs::path>& files) {
  std::vector<long> numbers;
  for (const auto& f : files) {
    const auto n = trailing_number(f);
    if (!n) return;  // not a numbered sequence
    numbers.push_back(*n);
  }
  std::sort(numbers.begin(), numbers.end());
  std::string missing;
  std::size_t count = 0;
  for (std::size_t i = 1; i < numbers.size(); ++i) {
    for (long k = numbers[i - 1] + 1; k < numbers[i]; ++k) {
      if (count++ < 20) missing += (missing.empty() ? "" : ", ") + std::to_string(k);
    }
  }
  if (count > 0) {
    if (count > 20) missing += ", ... (" + std::to_string(count) + " in total)";
    throw Error(ErrorCode::NotFound, "missing frames: " + missing);
  }
}

}  // namespace

SequenceReport process_sequence(const fs::path& in_dir, const fs::path& out_dir, const DeploymentSchedule& s,
                                const SequenceOptions& options) {
  s.validate();
  options.params.validate();
  if (!(options.fps > 0.0)) throw Error(ErrorCode::InvalidArgument, "fps must be positive");
  const auto files = list_images(in_dir);
  if (files.empty()) throw Error(ErrorCode::NoData, "no frames in " + in_dir.string());
  check_gaps(files);
  if (options.write_frames) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  }

  SequenceReport report;
  report.frames.resize(files.size());
  parallel_for(files.size(), options.threads, [&](std::size_t k) {
    const Image img = read_image(files[k]);
    FrameReport& r = report.frames[k];
    r.index = k;
    r.time = static_cast<double>(k) / options.fps;
    r.illuminant = s.illuminant_at(r.time);
    r.file = files[k].filename().string();
    const ShiftedFrame shifted = shift_frame(img, frame_cat(s, r.time), options.clip, options.params);
    r.power = shifted.power;
    r.clip_fraction = shifted.clip_fraction;
    r.baseline_power = frame_power(img, options.params);
    if (options.write_frames) {
      auto name = files[k].stem();
      name += ".png";
      write_image(out_dir / name, shifted.image);
    }
  });
  for (const auto& r : report.frames) {
    report.energy += r.power / options.fps;
    report.baseline_energy += r.baseline_power / options.fps;
  }
  return report;
}

void write_frame_report_csv(const fs::path& path, const SequenceReport& report) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "frame,time,illuminant_u,illuminant_v,power,baseline_power,clip_fraction,file\n";
  char buf[256];
  for (const auto& r : report.frames) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.9f,%.9f,%.12g,%.12g,%.9f,", r.index, r.time, r.illuminant.u,
                  r.illuminant.v, r.power, r.baseline_power, r.clip_fraction);
    out << buf << r.file << '\n';
  }
}

ChromaticityUV gray_world_illuminant(const Image& img) {
  const std::size_t n = img.pixel_count();
  if (n == 0) throw Error(ErrorCode::NoData, "empty image");
  LinearRGB mean;
  for (std::size_t i = 0; i < n; ++i) {
    const LinearRGB c = srgb_decode(img.at(i));
    mean.r += c.r;
    mean.g += c.g;
    mean.b += c.b;
  }
  if (mean.r + mean.g + mean.b <= 0.0) throw Error(ErrorCode::Degenerate, "all-black image has no illuminant");
  return xyz_uv(rgb_xyz(mean));
}

Image dim_image(const Image& img, double factor) {
  if (!(factor >= 0.0)) throw Error(ErrorCode::InvalidArgument, "dimming factor must be >= 0");
  Image out = img;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const LinearRGB c = srgb_decode(img.at(i));
    out.set(i, srgb_encode({factor * c.r, factor * c.g, factor * c.b}));
  }
  return out;
}

std::vector<DynamicSample> dynamic_target(const std::vector<ChromaticityUV>& original, double rate_hz,
                                          const AdaptationParams& p, double delta_d,
                                          const IlluminantFn& proposal) {
  p.validate();
  if (!(rate_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  if (!(delta_d >= 0.0)) throw Error(ErrorCode::InvalidArgument, "delta_d must be >= 0");
  if (original.empty()) return {};
  for (const auto& c : original) {
    if (!std::isfinite(c.u) || !std::isfinite(c.v)) throw Error(ErrorCode::InvalidArgument, "non-finite illuminant sample");
  }
  const ChromaticityUV d65 = d65_uv();
  const double dt = 1.0 / rate_hz;
  // One RK4 step of y' = k1 (k2 A - y) with A held over the sample interval.
  auto step = [&](ChromaticityUV y, ChromaticityUV drive) {
    auto f = [&](ChromaticityUV s) { return p.k1 * (p.k2 * drive - s); };
    const ChromaticityUV s1 = f(y);
    const ChromaticityUV s2 = f(y + (0.5 * dt) * s1);
    const ChromaticityUV s3 = f(y + (0.5 * dt) * s2);
    const ChromaticityUV s4 = f(y + dt * s3);
    return y + (dt / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
  };

  std::vector<DynamicSample> out;
  out.reserve(original.size());
  ChromaticityUV y_orig = p.k2 * (original.front() - d65);
  ChromaticityUV y = y_orig;
  for (std::size_t k = 0; k < original.size(); ++k) {
    DynamicSample s;
    s.t = static_cast<double>(k) * dt;
    s.original = original[k];
    s.original_state = d65 + y_orig;
    s.state = d65 + y;
    s.target = adapt_chromaticity(s.original, s.original_state, s.state);
    const ChromaticityUV want = proposal(s.t);
    const ChromaticityUV delta = want - s.target;
    const double len = norm(delta);
    if (len > delta_d) {
      s.illuminant = s.target + (delta_d / len) * delta;
      s.constrained = true;
    } else {
      s.illuminant = want;
    }
    out.push_back(s);
    y_orig = step(y_orig, s.original - d65);
    y = step(y, s.illuminant - d65);
  }
  return out;
}

std::vector<DynamicSample> dynamic_target(const std::vector<ChromaticityUV>& original, double rate_hz,
                                          const AdaptationParams& p, double delta_d, const DeploymentSchedule& s) {
  s.validate();
  return dynamic_target(original, rate_hz, p, delta_d, [&s](double t) { return s.illuminant_at(t); });
}

}  // namespace chroma
