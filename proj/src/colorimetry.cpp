#include "chroma/colorimetry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace chroma {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::OutOfRange: return "out_of_range";
    case ErrorCode::Io: return "io";
    case ErrorCode::Format: return "format";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::NoData: return "no_data";
  }
  return "unknown";
}

double Mat3::determinant() const {
  return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
         a[2] * (a[3] * a[7] - a[4] * a[6]);
}

Mat3 Mat3::inverse() const {
  const double det = determinant();
  if (!(std::abs(det) > 1e-300) || !std::isfinite(det)) {
    throw Error(ErrorCode::Degenerate, "singular 3x3 matrix");
  }
  const double inv = 1.0 / det;
  Mat3 r;
  r.a[0] = (a[4] * a[8] - a[5] * a[7]) * inv;
  r.a[1] = (a[2] * a[7] - a[1] * a[8]) * inv;
  r.a[2] = (a[1] * a[5] - a[2] * a[4]) * inv;
  r.a[3] = (a[5] * a[6] - a[3] * a[8]) * inv;
  r.a[4] = (a[0] * a[8] - a[2] * a[6]) * inv;
  r.a[5] = (a[2] * a[3] - a[0] * a[5]) * inv;
  r.a[6] = (a[3] * a[7] - a[4] * a[6]) * inv;
  r.a[7] = (a[1] * a[6] - a[0] * a[7]) * inv;
  r.a[8] = (a[0] * a[4] - a[1] * a[3]) * inv;
  return r;
}

Mat3 operator*(const Mat3& lhs, const Mat3& rhs) {
  Mat3 r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      r(i, j) = lhs(i, 0) * rhs(0, j) + lhs(i, 1) * rhs(1, j) + lhs(i, 2) * rhs(2, j);
    }
  }
  return r;
}

namespace {

const Mat3& xyz_to_srgb() {
  static const Mat3 m = kSrgbToXyz.inverse();
  return m;
}

const Mat3& bradford_inverse() {
  static const Mat3 m = kBradford.inverse();
  return m;
}

std::array<double, 3> to_array(const XYZ& x) { return {x.x, x.y, x.z}; }

}  // namespace

double srgb_decode(double c) {
  if (c <= 0.04045) return c / 12.92;
  return std::pow((c + 0.055) / 1.055, 2.4);
}

double srgb_encode(double c) {
  if (c <= 0.0031308) return 12.92 * c;
  return 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double srgb_decode_code(std::uint8_t code) {
  static const std::array<double, 256> lut = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) t[static_cast<std::size_t>(i)] = srgb_decode(i / 255.0);
    return t;
  }();
  return lut[code];
}

LinearRGB srgb_decode(const Rgb8& c8) {
  return {srgb_decode_code(c8[0]), srgb_decode_code(c8[1]), srgb_decode_code(c8[2])};
}

Rgb8 srgb_encode(const LinearRGB& c) {
  auto q = [](double x) {
    const double e = srgb_encode(std::clamp(x, 0.0, 1.0));
    return static_cast<std::uint8_t>(std::lround(std::clamp(e, 0.0, 1.0) * 255.0));
  };
  return {q(c.r), q(c.g), q(c.b)};
}

XYZ rgb_xyz(const LinearRGB& c) {
  const auto r = kSrgbToXyz.apply({c.r, c.g, c.b});
  return {r[0], r[1], r[2]};
}

LinearRGB xyz_rgb(const XYZ& x) {
  const auto r = xyz_to_srgb().apply(to_array(x));
  return {r[0], r[1], r[2]};
}

ChromaticityUV xyz_uv(const XYZ& x) {
  const double den = x.x + 15.0 * x.y + 3.0 * x.z;
  if (!(den > 0.0) || !std::isfinite(den)) {
    throw Error(ErrorCode::Degenerate, "u'v' undefined: X + 15Y + 3Z must be positive");
  }
  return {4.0 * x.x / den, 9.0 * x.y / den};
}

XYZ uv_xyz(const ChromaticityUV& c, double luminance) {
  if (!(c.v > 0.0) || !std::isfinite(c.u) || !std::isfinite(c.v)) {
    throw Error(ErrorCode::Degenerate, "u'v' chromaticity must have finite u' and v' > 0");
  }
  const double x = luminance * 9.0 * c.u / (4.0 * c.v);
  const double z = luminance * (12.0 - 3.0 * c.u - 20.0 * c.v) / (4.0 * c.v);
  return {x, luminance, z};
}

LMS xyz_lms(const XYZ& x) {
  const auto r = kBradford.apply(to_array(x));
  return {r[0], r[1], r[2]};
}

XYZ lms_xyz(const LMS& c) {
  const auto r = bradford_inverse().apply({c.l, c.m, c.s});
  return {r[0], r[1], r[2]};
}

const XYZ& d65_xyz() {
  static const XYZ w = rgb_xyz({1.0, 1.0, 1.0});
  return w;
}

const ChromaticityUV& d65_uv() {
  static const ChromaticityUV c = xyz_uv(d65_xyz());
  return c;
}

Mat3 bradford_xyz(const XYZ& src_white, const XYZ& dst_white) {
  const LMS s = xyz_lms(src_white);
  const LMS d = xyz_lms(dst_white);
  if (!(s.l > 0 && s.m > 0 && s.s > 0 && d.l > 0 && d.m > 0 && d.s > 0)) {
    throw Error(ErrorCode::Degenerate, "white point has a non-positive Bradford cone response");
  }
  const Mat3 scale = Mat3::diagonal(d.l / s.l, d.m / s.m, d.s / s.s);
  return bradford_inverse() * scale * kBradford;
}

CatMatrix bradford_cat(const XYZ& src_white, const XYZ& dst_white) {
  return CatMatrix{xyz_to_srgb() * bradford_xyz(src_white, dst_white) * kSrgbToXyz};
}

LinearRGB apply_cat(const LinearRGB& c, const CatMatrix& m) {
  const auto r = m.m.apply({c.r, c.g, c.b});
  return {r[0], r[1], r[2]};
}

ChromaticityUV adapt_chromaticity(const ChromaticityUV& color, const ChromaticityUV& src_white,
                                  const ChromaticityUV& dst_white) {
  const Mat3 m = bradford_xyz(uv_xyz(src_white, 1.0), uv_xyz(dst_white, 1.0));
  const auto r = m.apply(to_array(uv_xyz(color, 1.0)));
  return xyz_uv({r[0], r[1], r[2]});
}

double luminance(const LinearRGB& c) {
  return kSrgbToXyz.a[3] * c.r + kSrgbToXyz.a[4] * c.g + kSrgbToXyz.a[5] * c.b;
}

bool in_gamut(const LinearRGB& c, double tolerance) {
  auto ok = [tolerance](double x) { return x >= -tolerance && x <= 1.0 + tolerance; };
  return ok(c.r) && ok(c.g) && ok(c.b);
}

}  // namespace chroma
