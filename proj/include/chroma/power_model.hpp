#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "chroma/colorimetry.hpp"

namespace chroma {

/// Affine OLED power model: p(c) = per_channel . c + static_power.
struct DisplayPowerParams {
  std::array<double, 3> per_channel{1.0, 1.0, 2.0};
  double static_power = 0.0;

  void validate() const;
};

double pixel_power(const LinearRGB& c, const DisplayPowerParams& p);

/// Gamut handling applied to adapted colors before power evaluation.
enum class ClipPolicy {
  Clamp,    // per-channel clamp to [0, 1]
  Project,  // desaturate toward the equal-luminance gray, then clamp
  None,
};

ClipPolicy parse_clip_policy(const std::string& name);
std::string to_string(ClipPolicy policy);

/// Returns the in-gamut color; `clipped` reports whether it changed.
LinearRGB clip_color(const LinearRGB& c, ClipPolicy policy, bool* clipped = nullptr);

/// Normalized color frequency over quantized sRGB colors. Each channel is
/// quantized to `bins` levels on the 8-bit encoded axis; a bin stands for the
/// linear value of its level's code. Only populated bins are stored.
class ColorHistogram {
 public:
  struct Entry {
    std::uint32_t index = 0;  // (r * bins + g) * bins + b
    double weight = 0.0;
  };

  ColorHistogram() = default;
  /// Normalizes raw counts given as (index, count) pairs sorted by index.
  static ColorHistogram from_counts(int bins, const std::vector<std::pair<std::uint32_t, std::uint64_t>>& counts);
  /// Takes weights as given (they must already sum to 1).
  static ColorHistogram from_weights(int bins, std::vector<Entry> entries, std::uint64_t pixel_count = 0);

  int bins() const { return bins_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::uint64_t pixel_count() const { return pixel_count_; }
  double total_weight() const;

  int level_of(std::uint8_t code) const;
  std::uint32_t index_of(const Rgb8& c) const;
  std::array<int, 3> levels_of(std::uint32_t index) const;
  /// Linear color represented by a bin.
  LinearRGB bin_color(std::uint32_t index) const;

 private:
  int bins_ = 0;
  std::uint64_t pixel_count_ = 0;
  std::vector<Entry> entries_;
};

void validate_bins(int bins);

using WarningSink = std::function<void(const std::string&)>;

/// Histogram of every readable image in `files` (in the given order).
/// Unreadable files are skipped with a warning; no readable image is an error.
ColorHistogram build_histogram(const std::vector<std::filesystem::path>& files, int bins,
                               const WarningSink& warn = {}, unsigned threads = 1);
ColorHistogram build_histogram(const std::filesystem::path& corpus_dir, int bins,
                               const WarningSink& warn = {}, unsigned threads = 1);

struct Image;
ColorHistogram histogram_of(const Image& image, int bins);

void write_histogram(const std::filesystem::path& path, const ColorHistogram& h);
ColorHistogram read_histogram(const std::filesystem::path& path);

/// Average display power of the histogram's colors after adapting them from
/// D65 to `illuminant` (complete adaptation) and applying the clip policy.
class PowerEvaluator {
 public:
  PowerEvaluator(const ColorHistogram& h, DisplayPowerParams params, ClipPolicy clip = ClipPolicy::Clamp);

  double power(const ChromaticityUV& illuminant) const;
  double power(const CatMatrix& cat) const;
  /// power(illuminant) / power(D65), where the D65 reference goes through the
  /// same u'v' path so that relative_power(d65_uv()) == 1 exactly.
  double relative_power(const ChromaticityUV& illuminant) const;
  double reference_power() const { return reference_; }

  const DisplayPowerParams& params() const { return params_; }
  ClipPolicy clip() const { return clip_; }

 private:
  DisplayPowerParams params_;
  ClipPolicy clip_;
  std::vector<double> r_, g_, b_, w_;
  double reference_ = 0.0;
};

/// CAT taking D65-white content to an equiluminant target illuminant.
CatMatrix cat_from_d65(const ChromaticityUV& illuminant);

double illuminant_power(const ChromaticityUV& illuminant, const ColorHistogram& h, const DisplayPowerParams& p,
                        ClipPolicy clip = ClipPolicy::Clamp);

struct LandscapeGrid {
  int nu = 256;
  int nv = 256;
  double u_min = 0.12;
  double u_max = 0.30;
  double v_min = 0.40;
  double v_max = 0.56;
};

/// Relative power sampled on grid nodes. The node lattice is shifted (by at
/// most half a step) so that one node is exactly D65.
struct PowerLandscape {
  int nu = 0;
  int nv = 0;
  double u0 = 0.0;  // coordinate of node (0, 0)
  double v0 = 0.0;
  double du = 0.0;
  double dv = 0.0;
  int d65_i = 0;
  int d65_j = 0;
  std::vector<double> relative;  // row-major over v then u; NaN where invalid
  std::vector<std::uint8_t> valid;

  ChromaticityUV node(int i, int j) const;
  double at(int i, int j) const { return relative[static_cast<std::size_t>(j) * nu + i]; }
  bool is_valid(int i, int j) const { return valid[static_cast<std::size_t>(j) * nu + i] != 0; }
};

/// True when a chromaticity lies inside the sRGB primaries triangle.
bool in_srgb_chromaticity_gamut(const ChromaticityUV& c);

PowerLandscape power_landscape(const LandscapeGrid& grid, const PowerEvaluator& evaluator, unsigned threads = 1);

using Polyline = std::vector<ChromaticityUV>;

/// Iso-contours of a scalar field on a regular lattice (marching squares).
/// Segments are chained into polylines; closed contours repeat their first
/// point at the end.
std::vector<Polyline> iso_contours(int nu, int nv, const std::function<double(int, int)>& field,
                                   const std::function<ChromaticityUV(int, int)>& position, double level);

/// Contour of relative power 1.0. Empty when the landscape never crosses it.
std::vector<Polyline> savings_boundary(const PowerLandscape& l);

void write_landscape_csv(const std::filesystem::path& path, const PowerLandscape& l);
/// One byte per node: round(255 * min(relative, 1)); invalid nodes are 0.
void write_landscape_pgm(const std::filesystem::path& path, const PowerLandscape& l);
void write_contours_csv(const std::filesystem::path& path, const std::vector<Polyline>& contours);

}  // namespace chroma
