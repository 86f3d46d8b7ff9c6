#include <array>
#include <cmath>
#include <random>

#include "support.hpp"

#include "chroma/colorimetry.hpp"

using namespace chroma;

namespace {

// Independent reference: the sRGB transfer curve and u'v' formulas written
// from their textbook definitions, with xy as the intermediate.
double eotf(double e) { return e <= 0.04045 ? e / 12.92 : std::pow((e + 0.055) / 1.055, 2.4); }

ChromaticityUV uv_from_xy(double x, double y) {
  const double den = -2.0 * x + 12.0 * y + 3.0;
  return {4.0 * x / den, 9.0 * y / den};
}

using M = std::array<std::array<double, 3>, 3>;

M mul(const M& a, const M& b) {
  M r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

// Gauss-Jordan inverse, a different route from the cofactor inverse.
M invert(M a) {
  M inv{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int c = 0; c < 3; ++c) {
    int p = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    std::swap(a[c], a[p]);
    std::swap(inv[c], inv[p]);
    const double d = a[c][c];
    for (int j = 0; j < 3; ++j) {
      a[c][j] /= d;
      inv[c][j] /= d;
    }
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      for (int j = 0; j < 3; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

M to_m(const Mat3& m) {
  M r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = m(i, j);
  return r;
}

// Linear Bradford in sRGB written out step by step.
M reference_cat(const std::array<double, 3>& src_xyz, const std::array<double, 3>& dst_xyz) {
  const M rgb2xyz = to_m(kSrgbToXyz);
  const M brad = to_m(kBradford);
  auto lms = [&](const std::array<double, 3>& x) {
    std::array<double, 3> r{};
    for (int i = 0; i < 3; ++i) r[i] = brad[i][0] * x[0] + brad[i][1] * x[1] + brad[i][2] * x[2];
    return r;
  };
  const auto s = lms(src_xyz), d = lms(dst_xyz);
  M scale{{{d[0] / s[0], 0, 0}, {0, d[1] / s[1], 0}, {0, 0, d[2] / s[2]}}};
  return mul(invert(rgb2xyz), mul(invert(brad), mul(scale, mul(brad, rgb2xyz))));
}

LinearRGB random_rgb(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

ChromaticityUV random_white(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> du(-0.03, 0.03);
  return d65_uv() + ChromaticityUV{du(rng), du(rng)};
}

}  // namespace

TEST_CASE("reference constants are pinned") {
  const std::array<double, 9> srgb{0.4124564, 0.3575761, 0.1804375, 0.2126729, 0.7151522,
                                   0.0721750, 0.0193339, 0.1191920, 0.9503041};
  const std::array<double, 9> brad{0.8951, 0.2664, -0.1614, -0.7502, 1.7135, 0.0367, 0.0389, -0.0685, 1.0296};
  for (int i = 0; i < 9; ++i) {
    CHECK(kSrgbToXyz.a[i] == srgb[i]);
    CHECK(kBradford.a[i] == brad[i]);
  }
}

TEST_CASE("jnd scale") {
  CHECK(jnd(1) == 0.004);
  CHECK(jnd(0) == 0.0);
  CHECK(jnd(6) == doctest::Approx(0.024).epsilon(1e-15));
}

TEST_CASE("srgb decode endpoints and midpoint") {
  const LinearRGB black = srgb_decode(Rgb8{0, 0, 0});
  CHECK(black.r == 0.0);
  CHECK(black.b == 0.0);
  const LinearRGB white = srgb_decode(Rgb8{255, 255, 255});
  CHECK(white.r == 1.0);
  CHECK(white.g == 1.0);
  CHECK(white.b == 1.0);
  const LinearRGB mid = srgb_decode(Rgb8{128, 128, 128});
  CHECK(mid.g == doctest::Approx(eotf(128.0 / 255.0)).epsilon(1e-15));
  CHECK(mid.g == doctest::Approx(0.2158605).epsilon(1e-6));
}

TEST_CASE("srgb encode inverts decode for every code") {
  for (int c = 0; c < 256; ++c) {
    const auto code = static_cast<std::uint8_t>(c);
    const Rgb8 back = srgb_encode(srgb_decode(Rgb8{code, code, code}));
    CHECK(back[0] == code);
  }
  CHECK(srgb_encode(LinearRGB{-0.5, 2.0, 0.5})[0] == 0);
  CHECK(srgb_encode(LinearRGB{-0.5, 2.0, 0.5})[1] == 255);
}

TEST_CASE("rgb xyz basics and round trip") {
  const XYZ w = rgb_xyz({1, 1, 1});
  CHECK(w.y == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(w.x == doctest::Approx(0.9504700).epsilon(1e-7));
  CHECK(w.z == doctest::Approx(1.0888300).epsilon(1e-7));
  const XYZ z = rgb_xyz({0, 0, 0});
  CHECK(z.x == 0.0);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10000; ++i) {
    const LinearRGB c = random_rgb(rng, -0.2, 1.2);
    const LinearRGB back = xyz_rgb(rgb_xyz(c));
    CHECK(std::abs(back.r - c.r) <= 1e-10 * std::max(1.0, std::abs(c.r)));
    CHECK(std::abs(back.g - c.g) <= 1e-10 * std::max(1.0, std::abs(c.g)));
    CHECK(std::abs(back.b - c.b) <= 1e-10 * std::max(1.0, std::abs(c.b)));
  }
}

TEST_CASE("u'v' chromaticity") {
  const ChromaticityUV ref = uv_from_xy(0.31272, 0.32903);
  CHECK(std::abs(d65_uv().u - ref.u) < 1e-4);
  CHECK(std::abs(d65_uv().v - ref.v) < 1e-4);
  CHECK(std::abs(d65_uv().u - 0.19783) < 1e-4);
  CHECK(std::abs(d65_uv().v - 0.46832) < 1e-4);

  const ChromaticityUV ee = xyz_uv({1, 1, 1});
  CHECK(ee.u == doctest::Approx(4.0 / 19.0).epsilon(1e-15));
  CHECK(ee.v == doctest::Approx(9.0 / 19.0).epsilon(1e-15));

  CHECK_ERROR_CODE(xyz_uv({0, 0, 0}), ErrorCode::Degenerate);
  CHECK_ERROR_CODE(uv_xyz({0.2, 0.0}, 1.0), ErrorCode::Degenerate);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const XYZ p{u(rng), u(rng), u(rng)};
    const XYZ q = uv_xyz(xyz_uv(p), p.y);
    CHECK(test::rel_diff(q.x, p.x) < 1e-10);
    CHECK(test::rel_diff(q.y, p.y) < 1e-10);
    CHECK(test::rel_diff(q.z, p.z) < 1e-10);
  }
}

TEST_CASE("xyz lms round trip") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const XYZ p{u(rng), u(rng), u(rng)};
    const XYZ q = lms_xyz(xyz_lms(p));
    CHECK(std::abs(q.x - p.x) < 1e-12);
    CHECK(std::abs(q.z - p.z) < 1e-12);
  }
}

TEST_CASE("bradford self map is identity") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const XYZ w = uv_xyz(random_white(rng), 1.0);
    const CatMatrix m = bradford_cat(w, w);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) CHECK(std::abs(m.m(r, c) - (r == c ? 1.0 : 0.0)) < 1e-12);
  }
  const CatMatrix d = bradford_cat(d65_xyz(), d65_xyz());
  CHECK(std::abs(d.m(0, 0) - 1.0) < 1e-12);
}

TEST_CASE("bradford matches a step-by-step reference") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const XYZ s = uv_xyz(random_white(rng), 1.0);
    const XYZ t = uv_xyz(random_white(rng), 1.0);
    const M ref = reference_cat({s.x, s.y, s.z}, {t.x, t.y, t.z});
    const CatMatrix m = bradford_cat(s, t);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) CHECK(std::abs(m.m(r, c) - ref[r][c]) < 1e-12);
  }
}

TEST_CASE("white fidelity, invertibility and linearity over 10k random trips") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 10000; ++i) {
    const XYZ s = uv_xyz(random_white(rng), 1.0);
    const XYZ t = uv_xyz(random_white(rng), 1.0);
    const CatMatrix st = bradford_cat(s, t);
    const CatMatrix ts = bradford_cat(t, s);

    const LinearRGB out = apply_cat(xyz_rgb(s), st);
    const LinearRGB expect = xyz_rgb(t);
    CHECK(std::abs(out.r - expect.r) < 1e-12);
    CHECK(std::abs(out.g - expect.g) < 1e-12);
    CHECK(std::abs(out.b - expect.b) < 1e-12);

    const Mat3 prod = ts.m * st.m;
    const Mat3 inv = st.m.inverse();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        CHECK(std::abs(prod(r, c) - (r == c ? 1.0 : 0.0)) < 1e-9);
        CHECK(std::abs(ts.m(r, c) - inv(r, c)) < 1e-9);
      }
    }

    const LinearRGB c = random_rgb(rng);
    const LinearRGB back = apply_cat(apply_cat(c, st), ts);
    CHECK(std::abs(back.r - c.r) < 1e-9);
    CHECK(std::abs(back.g - c.g) < 1e-9);
    CHECK(std::abs(back.b - c.b) < 1e-9);

    const LinearRGB c2 = random_rgb(rng);
    const double a = 0.3, b = 1.7;
    const LinearRGB mix{a * c.r + b * c2.r, a * c.g + b * c2.g, a * c.b + b * c2.b};
    const LinearRGB lhs = apply_cat(mix, st);
    const LinearRGB r1 = apply_cat(c, st), r2 = apply_cat(c2, st);
    CHECK(std::abs(lhs.g - (a * r1.g + b * r2.g)) < 1e-12);
  }
}

TEST_CASE("black stays black and identity leaves colors alone") {
  const CatMatrix m = bradford_cat(d65_xyz(), uv_xyz(d65_uv() + ChromaticityUV{0.01, 0.02}, 1.0));
  const LinearRGB k = apply_cat({0, 0, 0}, m);
  CHECK(k.r == 0.0);
  CHECK(k.g == 0.0);
  CHECK(k.b == 0.0);
  const LinearRGB c{0.2, 0.5, 0.9};
  const LinearRGB same = apply_cat(c, CatMatrix{});
  CHECK(same.r == c.r);
  CHECK(same.b == c.b);
}

TEST_CASE("shift toward yellow moves colors toward yellow") {
  // Yellowish white: further along +v' and +u' from D65.
  const ChromaticityUV yellow = d65_uv() + ChromaticityUV{0.012, 0.018};
  const CatMatrix m = bradford_cat(d65_xyz(), uv_xyz(yellow, 1.0));
  const ChromaticityUV dir = yellow - d65_uv();
  std::mt19937_64 rng(21);
  int moved = 0;
  const int n = 500;
  for (int i = 0; i < n; ++i) {
    const LinearRGB c = random_rgb(rng, 0.05, 1.0);
    const ChromaticityUV before = xyz_uv(rgb_xyz(c));
    const ChromaticityUV after = xyz_uv(rgb_xyz(apply_cat(c, m)));
    if (dot(after - before, dir) > 0.0) ++moved;
  }
  CHECK(moved == n);
}

TEST_CASE("degenerate whites are rejected") {
  CHECK_ERROR_CODE(bradford_cat({0, 0, 0}, d65_xyz()), ErrorCode::Degenerate);
  CHECK_ERROR_CODE(bradford_cat(d65_xyz(), {-1, 0.1, 0.1}), ErrorCode::Degenerate);
  CHECK_ERROR_CODE(Mat3{}.inverse(), ErrorCode::Degenerate);
}

TEST_CASE("adapt_chromaticity maps the source white to the destination white") {
  const ChromaticityUV s = d65_uv();
  const ChromaticityUV t = d65_uv() + ChromaticityUV{-0.01, 0.015};
  const ChromaticityUV out = adapt_chromaticity(s, s, t);
  CHECK(std::abs(out.u - t.u) < 1e-12);
  CHECK(std::abs(out.v - t.v) < 1e-12);
}

TEST_CASE("gamut test") {
  CHECK(in_gamut({0, 0.5, 1}));
  CHECK_FALSE(in_gamut({-0.01, 0.5, 1}));
  CHECK(in_gamut({-0.01, 0.5, 1}, 0.02));
  CHECK(luminance({1, 1, 1}) == doctest::Approx(1.0).epsilon(1e-6));
}
