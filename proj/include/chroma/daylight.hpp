#pragma once

#include "chroma/colorimetry.hpp"

namespace chroma {

/// CIE D-series chromaticity (x, y) for a correlated color temperature in
/// [4000, 25000] K, returned in u'v'. Untranslated reference curve.
ChromaticityUV daylight_cct_uv(double cct_kelvin);

/// Point on the daylight locus at signed u'v' arc length from D65. Positive
/// arc moves toward lower CCT (D50 direction), negative toward higher CCT.
/// The locus is anchored so that arc 0 is exactly d65_uv().
ChromaticityUV daylight_locus(double arc);

/// Largest positive arc (reached at 4000 K).
double daylight_arc_max();
/// Most negative arc (reached at 25000 K).
double daylight_arc_min();

}  // namespace chroma
