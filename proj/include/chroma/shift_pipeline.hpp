#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chroma/adaptation.hpp"
#include "chroma/image_io.hpp"
#include "chroma/power_model.hpp"

namespace chroma {

/// CAT from D65 to the schedule's illuminant at min(t, t_max).
CatMatrix frame_cat(const DeploymentSchedule& s, double t);

struct ShiftedFrame {
  Image image;
  double power = 0.0;          // mean pixel power of the adapted, clipped frame
  double clip_fraction = 0.0;  // share of pixels that left the gamut
};

/// decode -> CAT -> clip -> encode, with power accounting on the unquantized
/// adapted values.
ShiftedFrame shift_frame(const Image& img, const CatMatrix& m, ClipPolicy clip, const DisplayPowerParams& params);
Image apply_shift_image(const Image& img, const CatMatrix& m, ClipPolicy clip);

/// Mean display power of an unmodified frame.
double frame_power(const Image& img, const DisplayPowerParams& params);

struct FrameReport {
  std::size_t index = 0;
  double time = 0.0;
  ChromaticityUV illuminant;
  double power = 0.0;
  double baseline_power = 0.0;  // same frame, unshifted
  double clip_fraction = 0.0;
  std::string file;
};

struct SequenceReport {
  std::vector<FrameReport> frames;
  double energy = 0.0;           // sum of power / fps
  double baseline_energy = 0.0;
  double saving() const { return baseline_energy > 0.0 ? 1.0 - energy / baseline_energy : 0.0; }
};

struct SequenceOptions {
  double fps = 30.0;
  ClipPolicy clip = ClipPolicy::Clamp;
  DisplayPowerParams params;
  unsigned threads = 1;
  bool write_frames = true;
};

/// Frame k is shown at t = k / fps. Output frames are written as PNG under
/// the input file's stem. Throws Error(NotFound) listing numbering gaps.
SequenceReport process_sequence(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                                const DeploymentSchedule& s, const SequenceOptions& options);

void write_frame_report_csv(const std::filesystem::path& path, const SequenceReport& report);

/// Chromaticity of the mean linear pixel. Throws Error(Degenerate) for black.
ChromaticityUV gray_world_illuminant(const Image& img);

/// Uniform luminance scaling in linear light, for baseline comparisons.
Image dim_image(const Image& img, double factor);

struct DynamicSample {
  double t = 0.0;
  ChromaticityUV original;    // A_o
  ChromaticityUV original_state;  // a_o
  ChromaticityUV state;       // a
  ChromaticityUV target;      // A*: A_o as seen under a_o, re-rendered for a
  ChromaticityUV illuminant;  // A, within delta_d of the target
  bool constrained = false;   // the proposal was pulled back onto the bound
};

/// Tracks the original-content illuminant samples (uniform at rate_hz) and
/// emits A(t) as close to the proposal as |A - A*| <= delta_d allows. Both
/// adaptation states start at the equilibrium for the first sample.
std::vector<DynamicSample> dynamic_target(const std::vector<ChromaticityUV>& original, double rate_hz,
                                          const AdaptationParams& p, double delta_d,
                                          const IlluminantFn& proposal);
/// Proposal = the deployment schedule's illuminant.
std::vector<DynamicSample> dynamic_target(const std::vector<ChromaticityUV>& original, double rate_hz,
                                          const AdaptationParams& p, double delta_d,
                                          const DeploymentSchedule& s);

}  // namespace chroma
