#include "chroma/power_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "chroma/image_io.hpp"
#include "chroma/parallel.hpp"

namespace chroma {
namespace fs = std::filesystem;

void DisplayPowerParams::validate() const {
  for (double p : per_channel) {
    if (!(p > 0.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidArgument, "per-channel power must be positive");
  }
  if (!(static_power >= 0.0) || !std::isfinite(static_power)) {
    throw Error(ErrorCode::InvalidArgument, "static power must be non-negative");
  }
}

double pixel_power(const LinearRGB& c, const DisplayPowerParams& p) {
  return p.per_channel[0] * c.r + p.per_channel[1] * c.g + p.per_channel[2] * c.b + p.static_power;
}

ClipPolicy parse_clip_policy(const std::string& name) {
  if (name == "clamp") return ClipPolicy::Clamp;
  if (name == "project") return ClipPolicy::Project;
  if (name == "none") return ClipPolicy::None;
  throw Error(ErrorCode::InvalidArgument, "unknown clip policy '" + name + "' (expected clamp, project or none)");
}

std::string to_string(ClipPolicy policy) {
  switch (policy) {
    case ClipPolicy::Clamp: return "clamp";
    case ClipPolicy::Project: return "project";
    case ClipPolicy::None: return "none";
  }
  return "clamp";
}

LinearRGB clip_color(const LinearRGB& c, ClipPolicy policy, bool* clipped) {
  const bool inside = in_gamut(c);
  if (clipped) *clipped = !inside;
  if (inside || policy == ClipPolicy::None) return c;
  auto clamp01 = [](const LinearRGB& x) {
    return LinearRGB{std::clamp(x.r, 0.0, 1.0), std::clamp(x.g, 0.0, 1.0), std::clamp(x.b, 0.0, 1.0)};
  };
  if (policy == ClipPolicy::Clamp) return clamp01(c);

  // Gray level whose luminance equals the color's.
  const double gray = std::clamp(luminance(c) / luminance({1.0, 1.0, 1.0}), 0.0, 1.0);
  double alpha = 1.0;
  for (double x : {c.r, c.g, c.b}) {
    if (x > 1.0) alpha = std::min(alpha, (1.0 - gray) / (x - gray));
    if (x < 0.0) alpha = std::min(alpha, gray / (gray - x));
  }
  alpha = std::max(alpha, 0.0);
  return clamp01({gray + alpha * (c.r - gray), gray + alpha * (c.g - gray), gray + alpha * (c.b - gray)});
}

void validate_bins(int bins) {
  if (bins < 16 || bins > 256) throw Error(ErrorCode::InvalidArgument, "bins per channel must lie in [16, 256]");
}

ColorHistogram ColorHistogram::from_counts(int bins,
                                           const std::vector<std::pair<std::uint32_t, std::uint64_t>>& counts) {
  validate_bins(bins);
  ColorHistogram h;
  h.bins_ = bins;
  for (const auto& [index, count] : counts) h.pixel_count_ += count;
  if (h.pixel_count_ == 0) throw Error(ErrorCode::NoData, "histogram has no pixels");
  h.entries_.reserve(counts.size());
  const double total = static_cast<double>(h.pixel_count_);
  for (const auto& [index, count] : counts) {
    if (count > 0) h.entries_.push_back({index, static_cast<double>(count) / total});
  }
  return h;
}

ColorHistogram ColorHistogram::from_weights(int bins, std::vector<Entry> entries, std::uint64_t pixel_count) {
  validate_bins(bins);
  const std::uint64_t cells = static_cast<std::uint64_t>(bins) * bins * bins;
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].index >= cells) throw Error(ErrorCode::Format, "histogram bin index out of range");
    if (!(entries[i].weight >= 0.0)) throw Error(ErrorCode::Format, "histogram weights must be non-negative");
    if (i > 0 && entries[i].index == entries[i - 1].index) throw Error(ErrorCode::Format, "duplicate histogram bin");
  }
  ColorHistogram h;
  h.bins_ = bins;
  h.entries_ = std::move(entries);
  h.pixel_count_ = pixel_count;
  if (std::abs(h.total_weight() - 1.0) > 1e-9) throw Error(ErrorCode::Format, "histogram weights must sum to 1");
  return h;
}

double ColorHistogram::total_weight() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.weight;
  return s;
}

int ColorHistogram::level_of(std::uint8_t code) const { return (code * (bins_ - 1) + 127) / 255; }

std::uint32_t ColorHistogram::index_of(const Rgb8& c) const {
  const auto b = static_cast<std::uint32_t>(bins_);
  return (static_cast<std::uint32_t>(level_of(c[0])) * b + static_cast<std::uint32_t>(level_of(c[1]))) * b +
         static_cast<std::uint32_t>(level_of(c[2]));
}

std::array<int, 3> ColorHistogram::levels_of(std::uint32_t index) const {
  const auto b = static_cast<std::uint32_t>(bins_);
  return {static_cast<int>(index / (b * b)), static_cast<int>((index / b) % b), static_cast<int>(index % b)};
}

LinearRGB ColorHistogram::bin_color(std::uint32_t index) const {
  const auto lv = levels_of(index);
  const double scale = 1.0 / (bins_ - 1);
  return {srgb_decode(lv[0] * scale), srgb_decode(lv[1] * scale), srgb_decode(lv[2] * scale)};
}

namespace {

using Counts = std::vector<std::pair<std::uint32_t, std::uint64_t>>;

Counts count_image(const Image& img, const ColorHistogram& quantizer) {
  std::vector<std::uint32_t> idx(img.pixel_count());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = quantizer.index_of(img.at(i));
  std::sort(idx.begin(), idx.end());
  Counts out;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && idx[j] == idx[i]) ++j;
    out.emplace_back(idx[i], j - i);
    i = j;
  }
  return out;
}

Counts merge_counts(const Counts& a, const Counts& b) {
  Counts out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.push_back(b[j++]);
    } else {
      out.emplace_back(a[i].first, a[i].second + b[j].second);
      ++i;
      ++j;
    }
  }
  return out;
}

ColorHistogram quantizer_for(int bins) {
  // Only the bin count matters for quantization.
  return ColorHistogram::from_counts(bins, {{0u, 1u}});
}

}  // namespace

ColorHistogram histogram_of(const Image& image, int bins) {
  validate_bins(bins);
  if (image.pixel_count() == 0) throw Error(ErrorCode::NoData, "empty image");
  return ColorHistogram::from_counts(bins, count_image(image, quantizer_for(bins)));
}

ColorHistogram build_histogram(const std::vector<fs::path>& files, int bins, const WarningSink& warn,
                               unsigned threads) {
  validate_bins(bins);
  if (files.empty()) throw Error(ErrorCode::NoData, "image corpus is empty");
  const ColorHistogram quantizer = quantizer_for(bins);
  std::vector<std::optional<Counts>> per_file(files.size());
  std::vector<std::string> errors(files.size());
  parallel_for(files.size(), threads, [&](std::size_t i) {
    try {
      const Image img = read_image(files[i]);
      if (img.pixel_count() == 0) throw Error(ErrorCode::Format, "image has no pixels");
      per_file[i] = count_image(img, quantizer);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  Counts total;
  std::size_t readable = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!per_file[i]) {
      if (warn) warn("skipping " + files[i].string() + ": " + errors[i]);
      continue;
    }
    total = merge_counts(total, *per_file[i]);
    ++readable;
  }
  if (readable == 0) throw Error(ErrorCode::NoData, "no readable images in corpus");
  return ColorHistogram::from_counts(bins, total);
}

ColorHistogram build_histogram(const fs::path& corpus_dir, int bins, const WarningSink& warn, unsigned threads) {
  return build_histogram(list_images(corpus_dir), bins, warn, threads);
}

void write_histogram(const fs::path& path, const ColorHistogram& h) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "# chroma color histogram; levels are on the 8-bit encoded axis\n";
  out << "format,chroma-histogram,1\n";
  out << "bins_per_channel," << h.bins() << "\n";
  out << "pixels," << h.pixel_count() << "\n";
  out << "r,g,b,weight\n";
  char buf[64];
  for (const auto& e : h.entries()) {
    const auto lv = h.levels_of(e.index);
    std::snprintf(buf, sizeof buf, "%.17g", e.weight);
    out << lv[0] << ',' << lv[1] << ',' << lv[2] << ',' << buf << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

ColorHistogram read_histogram(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  int bins = 0;
  std::uint64_t pixels = 0;
  bool have_format = false;
  bool in_body = false;
  std::vector<ColorHistogram::Entry> entries;
  auto fail = [&](const std::string& why) { throw Error(ErrorCode::Format, path.string() + ": " + why); };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    try {
      if (!in_body) {
        if (cols[0] == "format") {
          if (cols.size() < 3 || cols[1] != "chroma-histogram" || cols[2] != "1") fail("unsupported histogram format");
          have_format = true;
        } else if (cols[0] == "bins_per_channel" && cols.size() >= 2) {
          bins = std::stoi(cols[1]);
        } else if (cols[0] == "pixels" && cols.size() >= 2) {
          pixels = std::stoull(cols[1]);
        } else if (cols[0] == "r") {
          in_body = true;
        } else {
          fail("unexpected header line '" + line + "'");
        }
        continue;
      }
      if (cols.size() != 4) fail("expected r,g,b,weight");
      const int r = std::stoi(cols[0]), g = std::stoi(cols[1]), b = std::stoi(cols[2]);
      if (r < 0 || g < 0 || b < 0 || r >= bins || g >= bins || b >= bins) fail("bin level out of range");
      const auto ub = static_cast<std::uint32_t>(bins);
      entries.push_back({(static_cast<std::uint32_t>(r) * ub + static_cast<std::uint32_t>(g)) * ub +
                             static_cast<std::uint32_t>(b),
                         std::stod(cols[3])});
    } catch (const std::invalid_argument&) {
      fail("malformed number in '" + line + "'");
    } catch (const std::out_of_range&) {
      fail("number out of range in '" + line + "'");
    }
  }
  if (!have_format || !in_body) fail("missing histogram header");
  return ColorHistogram::from_weights(bins, std::move(entries), pixels);
}

CatMatrix cat_from_d65(const ChromaticityUV& illuminant) {
  return bradford_cat(d65_xyz(), uv_xyz(illuminant, d65_xyz().y));
}

PowerEvaluator::PowerEvaluator(const ColorHistogram& h, DisplayPowerParams params, ClipPolicy clip)
    : params_(params), clip_(clip) {
  params_.validate();
  if (h.entries().empty()) throw Error(ErrorCode::NoData, "histogram is empty");
  const std::size_t n = h.entries().size();
  r_.reserve(n);
  g_.reserve(n);
  b_.reserve(n);
  w_.reserve(n);
  for (const auto& e : h.entries()) {
    const LinearRGB c = h.bin_color(e.index);
    r_.push_back(c.r);
    g_.push_back(c.g);
    b_.push_back(c.b);
    w_.push_back(e.weight);
  }
  reference_ = power(d65_uv());
}

double PowerEvaluator::power(const CatMatrix& cat) const {
  const auto& m = cat.m.a;
  const auto& p = params_.per_channel;
  double sum = 0.0;
  const std::size_t n = w_.size();
  if (clip_ == ClipPolicy::Clamp) {
    for (std::size_t i = 0; i < n; ++i) {
      const double r = std::clamp(m[0] * r_[i] + m[1] * g_[i] + m[2] * b_[i], 0.0, 1.0);
      const double g = std::clamp(m[3] * r_[i] + m[4] * g_[i] + m[5] * b_[i], 0.0, 1.0);
      const double b = std::clamp(m[6] * r_[i] + m[7] * g_[i] + m[8] * b_[i], 0.0, 1.0);
      sum += w_[i] * (p[0] * r + p[1] * g + p[2] * b);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const LinearRGB c = clip_color(apply_cat({r_[i], g_[i], b_[i]}, cat), clip_);
      sum += w_[i] * (p[0] * c.r + p[1] * c.g + p[2] * c.b);
    }
  }
  // Weights sum to one, so the static term contributes exactly once.
  return sum + params_.static_power;
}

double PowerEvaluator::power(const ChromaticityUV& illuminant) const { return power(cat_from_d65(illuminant)); }

double PowerEvaluator::relative_power(const ChromaticityUV& illuminant) const {
  return power(illuminant) / reference_;
}

double illuminant_power(const ChromaticityUV& illuminant, const ColorHistogram& h, const DisplayPowerParams& p,
                        ClipPolicy clip) {
  return PowerEvaluator(h, p, clip).power(illuminant);
}

bool in_srgb_chromaticity_gamut(const ChromaticityUV& c) {
  static const ChromaticityUV r = xyz_uv(rgb_xyz({1, 0, 0}));
  static const ChromaticityUV g = xyz_uv(rgb_xyz({0, 1, 0}));
  static const ChromaticityUV b = xyz_uv(rgb_xyz({0, 0, 1}));
  auto cross = [](ChromaticityUV o, ChromaticityUV a, ChromaticityUV p) {
    return (a.u - o.u) * (p.v - o.v) - (a.v - o.v) * (p.u - o.u);
  };
  const double d1 = cross(r, g, c);
  const double d2 = cross(g, b, c);
  const double d3 = cross(b, r, c);
  const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
  const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
  return !(has_neg && has_pos);
}

ChromaticityUV PowerLandscape::node(int i, int j) const {
  const ChromaticityUV d = d65_uv();
  return {d.u + (i - d65_i) * du, d.v + (j - d65_j) * dv};
}

PowerLandscape power_landscape(const LandscapeGrid& grid, const PowerEvaluator& evaluator, unsigned threads) {
  if (grid.nu < 2 || grid.nv < 2) throw Error(ErrorCode::InvalidArgument, "landscape grid needs at least 2x2 nodes");
  if (!(grid.u_max > grid.u_min) || !(grid.v_max > grid.v_min)) {
    throw Error(ErrorCode::InvalidArgument, "landscape bounds are empty");
  }
  PowerLandscape l;
  l.nu = grid.nu;
  l.nv = grid.nv;
  l.du = (grid.u_max - grid.u_min) / (grid.nu - 1);
  l.dv = (grid.v_max - grid.v_min) / (grid.nv - 1);
  const ChromaticityUV d = d65_uv();
  l.d65_i = static_cast<int>(std::lround((d.u - grid.u_min) / l.du));
  l.d65_j = static_cast<int>(std::lround((d.v - grid.v_min) / l.dv));
  l.u0 = l.node(0, 0).u;
  l.v0 = l.node(0, 0).v;
  const std::size_t n = static_cast<std::size_t>(l.nu) * l.nv;
  l.relative.assign(n, std::numeric_limits<double>::quiet_NaN());
  l.valid.assign(n, 0);
  parallel_for(static_cast<std::size_t>(l.nv), threads, [&](std::size_t j) {
    for (int i = 0; i < l.nu; ++i) {
      const ChromaticityUV c = l.node(i, static_cast<int>(j));
      if (!in_srgb_chromaticity_gamut(c)) continue;
      try {
        const double rel = evaluator.relative_power(c);
        l.relative[j * l.nu + i] = rel;
        l.valid[j * l.nu + i] = 1;
      } catch (const Error&) {
        // Degenerate white (non-positive cone response): leave invalid.
      }
    }
  });
  return l;
}

std::vector<Polyline> iso_contours(int nu, int nv, const std::function<double(int, int)>& field,
                                   const std::function<ChromaticityUV(int, int)>& position, double level) {
  struct Segment {
    long a, b;  // edge keys
    ChromaticityUV pa, pb;
  };
  auto hkey = [nu](int i, int j) { return 2L * (static_cast<long>(j) * nu + i); };
  auto vkey = [nu](int i, int j) { return 2L * (static_cast<long>(j) * nu + i) + 1; };
  auto lerp = [&](int i0, int j0, int i1, int j1) {
    const double f0 = field(i0, j0), f1 = field(i1, j1);
    const double t = (level - f0) / (f1 - f0);
    const ChromaticityUV p0 = position(i0, j0), p1 = position(i1, j1);
    return p0 + t * (p1 - p0);
  };

  std::vector<Segment> segs;
  for (int j = 0; j + 1 < nv; ++j) {
    for (int i = 0; i + 1 < nu; ++i) {
      const double f00 = field(i, j), f10 = field(i + 1, j), f11 = field(i + 1, j + 1), f01 = field(i, j + 1);
      if (std::isnan(f00) || std::isnan(f10) || std::isnan(f11) || std::isnan(f01)) continue;
      const int code = (f00 > level) | ((f10 > level) << 1) | ((f11 > level) << 2) | ((f01 > level) << 3);
      if (code == 0 || code == 15) continue;
      // Edges: bottom (i,j)-(i+1,j), right (i+1,j)-(i+1,j+1), top (i,j+1)-(i+1,j+1), left (i,j)-(i,j+1).
      struct E {
        long key;
        ChromaticityUV p;
      };
      auto bottom = [&] { return E{hkey(i, j), lerp(i, j, i + 1, j)}; };
      auto right = [&] { return E{vkey(i + 1, j), lerp(i + 1, j, i + 1, j + 1)}; };
      auto top = [&] { return E{hkey(i, j + 1), lerp(i, j + 1, i + 1, j + 1)}; };
      auto left = [&] { return E{vkey(i, j), lerp(i, j, i, j + 1)}; };
      auto add = [&](E x, E y) { segs.push_back({x.key, y.key, x.p, y.p}); };
      const bool center_high = 0.25 * (f00 + f10 + f11 + f01) > level;
      switch (code) {
        case 1: case 14: add(left(), bottom()); break;
        case 2: case 13: add(bottom(), right()); break;
        case 3: case 12: add(left(), right()); break;
        case 4: case 11: add(right(), top()); break;
        case 6: case 9: add(bottom(), top()); break;
        case 7: case 8: add(left(), top()); break;
        case 5:
          if (center_high) { add(left(), top()); add(bottom(), right()); }
          else { add(left(), bottom()); add(right(), top()); }
          break;
        case 10:
          if (center_high) { add(left(), bottom()); add(right(), top()); }
          else { add(left(), top()); add(bottom(), right()); }
          break;
        default: break;
      }
    }
  }

  std::unordered_map<long, std::vector<std::size_t>> by_key;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    by_key[segs[s].a].push_back(s);
    by_key[segs[s].b].push_back(s);
  }
  std::vector<char> used(segs.size(), 0);
  std::vector<Polyline> lines;

  auto walk = [&](std::size_t start, long from_key) {
    Polyline line;
    std::size_t s = start;
    long key = from_key;
    line.push_back(segs[s].a == key ? segs[s].pa : segs[s].pb);
    while (true) {
      used[s] = 1;
      const bool forward = segs[s].a == key;
      const long next_key = forward ? segs[s].b : segs[s].a;
      line.push_back(forward ? segs[s].pb : segs[s].pa);
      std::optional<std::size_t> next;
      for (std::size_t cand : by_key[next_key]) {
        if (!used[cand]) {
          next = cand;
          break;
        }
      }
      if (!next) break;
      s = *next;
      key = next_key;
    }
    return line;
  };

  // Open contours start at edge keys touched by a single segment.
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (used[s]) continue;
    for (long key : {segs[s].a, segs[s].b}) {
      if (!used[s] && by_key[key].size() == 1) lines.push_back(walk(s, key));
    }
  }
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (!used[s]) lines.push_back(walk(s, segs[s].a));
  }
  return lines;
}

std::vector<Polyline> savings_boundary(const PowerLandscape& l) {
  return iso_contours(
      l.nu, l.nv, [&](int i, int j) { return l.at(i, j); }, [&](int i, int j) { return l.node(i, j); }, 1.0);
}

void write_landscape_csv(const fs::path& path, const PowerLandscape& l) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "i,j,u,v,relative_power,relative_power_clipped,valid\n";
  char buf[160];
  for (int j = 0; j < l.nv; ++j) {
    for (int i = 0; i < l.nu; ++i) {
      const ChromaticityUV c = l.node(i, j);
      const double rel = l.at(i, j);
      if (l.is_valid(i, j)) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.9f,%.9f,%.12g,%.12g,1\n", i, j, c.u, c.v, rel, std::min(rel, 1.0));
      } else {
        std::snprintf(buf, sizeof buf, "%d,%d,%.9f,%.9f,,,0\n", i, j, c.u, c.v);
      }
      out << buf;
    }
  }
}

void write_landscape_pgm(const fs::path& path, const PowerLandscape& l) {
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(l.nu) * l.nv, 0);
  // Image rows run top-down, so v decreases with the row index.
  for (int j = 0; j < l.nv; ++j) {
    for (int i = 0; i < l.nu; ++i) {
      if (!l.is_valid(i, j)) continue;
      const double rel = std::clamp(l.at(i, j), 0.0, 1.0);
      gray[static_cast<std::size_t>(l.nv - 1 - j) * l.nu + i] = static_cast<std::uint8_t>(std::lround(255.0 * rel));
    }
  }
  write_pgm(path, l.nu, l.nv, gray);
}

void write_contours_csv(const fs::path& path, const std::vector<Polyline>& contours) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "contour,point,u,v\n";
  char buf[96];
  for (std::size_t c = 0; c < contours.size(); ++c) {
    for (std::size_t k = 0; k < contours[c].size(); ++k) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.9f,%.9f\n", c, k, contours[c][k].u, contours[c][k].v);
      out << buf;
    }
  }
}

}  // namespace chroma
