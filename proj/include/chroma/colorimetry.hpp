#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "chroma/error.hpp"

namespace chroma {

/// Linear-light display RGB (sRGB primaries, D65 white). Values outside
/// [0,1] are allowed; clipping is a pipeline policy, not a colorimetric one.
struct LinearRGB {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

/// CIE 1931 tristimulus values; y is relative luminance.
struct XYZ {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Cone-like responses in the Bradford sharpened basis.
struct LMS {
  double l = 0.0;
  double m = 0.0;
  double s = 0.0;
};

/// A point in the CIE 1976 u'v' plane.
struct ChromaticityUV {
  double u = 0.0;
  double v = 0.0;

  friend ChromaticityUV operator+(ChromaticityUV a, ChromaticityUV b) { return {a.u + b.u, a.v + b.v}; }
  friend ChromaticityUV operator-(ChromaticityUV a, ChromaticityUV b) { return {a.u - b.u, a.v - b.v}; }
  friend ChromaticityUV operator*(double s, ChromaticityUV a) { return {s * a.u, s * a.v}; }
  friend ChromaticityUV operator*(ChromaticityUV a, double s) { return {s * a.u, s * a.v}; }
  friend bool operator==(ChromaticityUV a, ChromaticityUV b) = default;
};

inline double dot(ChromaticityUV a, ChromaticityUV b) { return a.u * b.u + a.v * b.v; }
inline double norm(ChromaticityUV a) { return std::hypot(a.u, a.v); }
inline double distance(ChromaticityUV a, ChromaticityUV b) { return norm(a - b); }

struct Illuminant {
  ChromaticityUV chromaticity;
  double luminance = 1.0;
};

using Rgb8 = std::array<std::uint8_t, 3>;

/// Row-major 3x3 matrix acting on column vectors.
struct Mat3 {
  std::array<double, 9> a{};

  static Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }
  static Mat3 diagonal(double d0, double d1, double d2) { return Mat3{{d0, 0, 0, 0, d1, 0, 0, 0, d2}}; }

  double operator()(int row, int col) const { return a[static_cast<std::size_t>(3 * row + col)]; }
  double& operator()(int row, int col) { return a[static_cast<std::size_t>(3 * row + col)]; }

  std::array<double, 3> apply(const std::array<double, 3>& x) const {
    return {a[0] * x[0] + a[1] * x[1] + a[2] * x[2],
            a[3] * x[0] + a[4] * x[1] + a[5] * x[2],
            a[6] * x[0] + a[7] * x[1] + a[8] * x[2]};
  }

  double determinant() const;
  /// Throws Error(Degenerate) for a singular matrix.
  Mat3 inverse() const;

  friend Mat3 operator*(const Mat3& lhs, const Mat3& rhs);
};

/// Linear-RGB to linear-RGB transform produced by a chromatic adaptation.
struct CatMatrix {
  Mat3 m = Mat3::identity();
};

// Reference constants (Lindbloom). Pinned by unit tests.
inline constexpr Mat3 kSrgbToXyz{{0.4124564, 0.3575761, 0.1804375,
                                  0.2126729, 0.7151522, 0.0721750,
                                  0.0193339, 0.1191920, 0.9503041}};
inline constexpr Mat3 kBradford{{0.8951000, 0.2664000, -0.1614000,
                                 -0.7502000, 1.7135000, 0.0367000,
                                 0.0389000, -0.0685000, 1.0296000}};

/// One just-noticeable difference in u'v'.
inline constexpr double kJnd = 0.004;
inline constexpr double jnd(double n) { return n * kJnd; }

double srgb_decode(double encoded);
double srgb_encode(double linear);
LinearRGB srgb_decode(const Rgb8& c8);
/// Clamps to [0,1] before quantizing.
Rgb8 srgb_encode(const LinearRGB& c);
/// Linear value of an 8-bit code, from a lookup table.
double srgb_decode_code(std::uint8_t code);

XYZ rgb_xyz(const LinearRGB& c);
LinearRGB xyz_rgb(const XYZ& x);

ChromaticityUV xyz_uv(const XYZ& x);
XYZ uv_xyz(const ChromaticityUV& c, double luminance);

LMS xyz_lms(const XYZ& x);
XYZ lms_xyz(const LMS& c);

/// White of the sRGB primaries, i.e. rgb_xyz(1,1,1).
const XYZ& d65_xyz();
const ChromaticityUV& d65_uv();

/// von Kries scaling in the Bradford basis, expressed as an XYZ -> XYZ map.
Mat3 bradford_xyz(const XYZ& src_white, const XYZ& dst_white);
/// Linear Bradford CAT acting on linear sRGB.
CatMatrix bradford_cat(const XYZ& src_white, const XYZ& dst_white);
LinearRGB apply_cat(const LinearRGB& c, const CatMatrix& m);

/// Appearance-matched chromaticity of `color` when the adapting white moves
/// from `src_white` to `dst_white` (all at unit luminance).
ChromaticityUV adapt_chromaticity(const ChromaticityUV& color, const ChromaticityUV& src_white,
                                  const ChromaticityUV& dst_white);

double luminance(const LinearRGB& c);
bool in_gamut(const LinearRGB& c, double tolerance = 0.0);

}  // namespace chroma
