#include <array>
#include <cmath>
#include <random>

#include "support.hpp"

#include "chroma/shift_pipeline.hpp"

using namespace chroma;
namespace fs = std::filesystem;

namespace {

using M3 = std::array<std::array<double, 3>, 3>;
using V3 = std::array<double, 3>;

M3 mul(const M3& a, const M3& b) {
  M3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

V3 mul(const M3& a, const V3& x) {
  return {a[0][0] * x[0] + a[0][1] * x[1] + a[0][2] * x[2], a[1][0] * x[0] + a[1][1] * x[1] + a[1][2] * x[2],
          a[2][0] * x[0] + a[2][1] * x[1] + a[2][2] * x[2]};
}

// Adjugate over determinant.
M3 inv(const M3& m) {
  M3 c;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      c[i][j] = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    }
  }
  const double det = m[0][0] * c[0][0] + m[0][1] * c[1][0] + m[0][2] * c[2][0];
  for (auto& row : c)
    for (double& x : row) x /= det;
  return c;
}

const M3 kM{{{0.4124564, 0.3575761, 0.1804375}, {0.2126729, 0.7151522, 0.0721750}, {0.0193339, 0.1191920, 0.9503041}}};
const M3 kB{{{0.8951, 0.2664, -0.1614}, {-0.7502, 1.7135, 0.0367}, {0.0389, -0.0685, 1.0296}}};

double eotf(double e) { return e <= 0.04045 ? e / 12.92 : std::pow((e + 0.055) / 1.055, 2.4); }
double oetf(double l) { return l <= 0.0031308 ? 12.92 * l : 1.055 * std::pow(l, 1.0 / 2.4) - 0.055; }

// Linear sRGB -> linear sRGB Bradford map from D65 to the illuminant at u'v'.
M3 oracle_cat(double u, double v) {
  const V3 src = mul(kM, V3{1.0, 1.0, 1.0});
  const double x = 9.0 * u / (6.0 * u - 16.0 * v + 12.0), y = 4.0 * v / (6.0 * u - 16.0 * v + 12.0);
  const double Y = src[1];
  const V3 dst{x * Y / y, Y, (1.0 - x - y) * Y / y};
  const V3 ls = mul(kB, src), ld = mul(kB, dst);
  M3 d{};
  for (int i = 0; i < 3; ++i) d[i][i] = ld[i] / ls[i];
  return mul(inv(kM), mul(inv(kB), mul(d, mul(kB, kM))));
}

Rgb8 oracle_pixel(const M3& cat, const Rgb8& in) {
  const V3 lin{eotf(in[0] / 255.0), eotf(in[1] / 255.0), eotf(in[2] / 255.0)};
  const V3 out = mul(cat, lin);
  Rgb8 r;
  for (int i = 0; i < 3; ++i) r[i] = static_cast<std::uint8_t>(std::lround(255.0 * oetf(std::clamp(out[i], 0.0, 1.0))));
  return r;
}

int max_code_diff(const Image& a, const Image& b) {
  int worst = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) worst = std::max(worst, std::abs(int(a.pixels[i]) - int(b.pixels[i])));
  return worst;
}

Image random_image(int w, int h, std::uint64_t seed) {
  Image img = Image::filled(w, h, {0, 0, 0});
  std::mt19937_64 rng(seed);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

const Image& sample_image() {
  static const Image img = read_image(list_images(test::data_dir() / "corpus").front());
  return img;
}

DeploymentSchedule greener(double v, double t_max) { return {Trajectory::linear(2.256), v, t_max}; }

}  // namespace

TEST_CASE("frame CAT follows the schedule") {
  const DeploymentSchedule s = greener(4e-4, 120.0);
  const CatMatrix m0 = frame_cat(s, 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(m0.m(i, j) - (i == j ? 1.0 : 0.0)) < 1e-12);
  const CatMatrix a = frame_cat(s, 120.0), b = frame_cat(s, 500.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(a.m(i, j) == b.m(i, j));
  // Midpoint of the ramp uses the midpoint illuminant.
  const ChromaticityUV mid = s.trajectory.point_at(4e-4 * 60.0);
  const M3 want = oracle_cat(mid.u, mid.v);
  const CatMatrix got = frame_cat(s, 60.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(got.m(i, j) - want[i][j]) < 1e-9);
  CHECK_ERROR_CODE(frame_cat(s, -1.0), ErrorCode::OutOfRange);
}

TEST_CASE("identity CAT leaves frames unchanged") {
  const Image img = random_image(64, 48, 1);
  CHECK(max_code_diff(apply_shift_image(img, CatMatrix{}, ClipPolicy::Clamp), img) <= 1);
  CHECK(max_code_diff(apply_shift_image(img, frame_cat(greener(4e-4, 60.0), 0.0), ClipPolicy::Clamp), img) <= 1);
  CHECK(max_code_diff(apply_shift_image(sample_image(), CatMatrix{}, ClipPolicy::Project), sample_image()) <= 1);
}

TEST_CASE("white maps to the target illuminant") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> phi(0.0, 6.283), r(0.0, 0.03);
  for (int i = 0; i < 200; ++i) {
    const double a = phi(rng), d = r(rng);
    const ChromaticityUV target{d65_uv().u + d * std::cos(a), d65_uv().v + d * std::sin(a)};
    const LinearRGB w = apply_cat({1.0, 1.0, 1.0}, cat_from_d65(target));
    const ChromaticityUV got = xyz_uv(rgb_xyz(w));
    CHECK(distance(got, target) < 1e-9);
    CHECK(std::abs(luminance(w) - luminance({1.0, 1.0, 1.0})) < 1e-9);
  }
}

TEST_CASE("shifted pixels match an independent oracle") {
  const Image img = random_image(40, 40, 3);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> phi(0.0, 6.283), r(0.0, 0.03);
  for (int k = 0; k < 20; ++k) {
    const double a = phi(rng), d = r(rng);
    const ChromaticityUV target{d65_uv().u + d * std::cos(a), d65_uv().v + d * std::sin(a)};
    const Image out = apply_shift_image(img, cat_from_d65(target), ClipPolicy::Clamp);
    const M3 cat = oracle_cat(target.u, target.v);
    int worst = 0;
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
      const Rgb8 want = oracle_pixel(cat, img.at(i)), got = out.at(i);
      for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(int(want[c]) - int(got[c])));
    }
    CHECK(worst <= 1);
  }
}

TEST_CASE("frame power accounting") {
  const Image img = sample_image();
  const DisplayPowerParams p;
  const ShiftedFrame same = shift_frame(img, CatMatrix{}, ClipPolicy::Clamp, p);
  CHECK(std::abs(same.power - frame_power(img, p)) < 1e-12);
  CHECK(same.clip_fraction == 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) sum += pixel_power(srgb_decode(img.at(i)), p);
  CHECK(std::abs(frame_power(img, p) - sum / double(img.pixel_count())) < 1e-12);
  const ShiftedFrame far = shift_frame(Image::filled(4, 4, {255, 255, 255}), frame_cat(greener(4e-4, 120.0), 120.0),
                                       ClipPolicy::Clamp, p);
  CHECK(far.clip_fraction == 1.0);
  CHECK(frame_power(Image{}, p) == 0.0);
}

TEST_CASE("sequence processing") {
  test::TempDir dir("seq");
  const fs::path in = dir / "in", out = dir / "out";
  fs::create_directories(in);
  const Image img = sample_image();
  for (int k = 0; k < 8; ++k) write_image(in / ("frame_" + std::to_string(1000 + k) + ".png"), img);

  SequenceOptions opt;
  opt.fps = 1.0;
  SUBCASE("zero velocity leaves every frame unchanged") {
    const SequenceReport r = process_sequence(in, out, greener(0.0, 6.0), opt);
    REQUIRE(r.frames.size() == 8);
    for (const auto& f : r.frames) {
      CHECK(max_code_diff(read_image(out / f.file), img) <= 1);
      CHECK(std::abs(f.power - f.baseline_power) < 1e-12);
    }
    CHECK(std::abs(r.saving()) < 1e-12);
  }
  SUBCASE("power falls along the ramp and holds after it") {
    opt.threads = 3;
    const DeploymentSchedule s = greener(0.05 / 6.0, 6.0);
    const SequenceReport r = process_sequence(in, out, s, opt);
    for (std::size_t k = 1; k < 7; ++k) CHECK(r.frames[k].power < r.frames[k - 1].power);
    CHECK(r.frames[7].power == r.frames[6].power);
    double energy = 0.0, base = 0.0;
    for (std::size_t k = 0; k < 8; ++k) {
      const ShiftedFrame f = shift_frame(img, frame_cat(s, double(k)), opt.clip, opt.params);
      CHECK(f.power == r.frames[k].power);
      CHECK(r.frames[k].time == double(k));
      CHECK(distance(r.frames[k].illuminant, s.illuminant_at(double(k))) == 0.0);
      CHECK(max_code_diff(read_image(out / r.frames[k].file), f.image) == 0);
      energy += f.power;
      base += frame_power(img, opt.params);
    }
    CHECK(std::abs(r.energy - energy) < 1e-12);
    CHECK(std::abs(r.baseline_energy - base) < 1e-12);
    CHECK(r.saving() > 0.0);
    write_frame_report_csv(dir / "report.csv", r);
    CHECK(fs::file_size(dir / "report.csv") > 100);
  }
  SUBCASE("numbering gaps are reported") {
    fs::remove(in / "frame_1003.png");
    fs::remove(in / "frame_1005.png");
    try {
      process_sequence(in, out, greener(1e-4, 6.0), opt);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotFound);
      CHECK(std::string(e.what()).find("1003, 1005") != std::string::npos);
    }
  }
  SUBCASE("input validation") {
    CHECK_ERROR_CODE(process_sequence(dir / "none", out, greener(1e-4, 6.0), opt), ErrorCode::NotFound);
    fs::create_directories(dir / "empty");
    CHECK_ERROR_CODE(process_sequence(dir / "empty", out, greener(1e-4, 6.0), opt), ErrorCode::NoData);
    opt.fps = 0.0;
    CHECK_ERROR_CODE(process_sequence(in, out, greener(1e-4, 6.0), opt), ErrorCode::InvalidArgument);
    opt.fps = 1.0;
    CHECK_ERROR_CODE(process_sequence(in, out, DeploymentSchedule{Trajectory::daylight(), 0.01, 6.0}, opt), ErrorCode::OutOfRange);
  }
}

TEST_CASE("gray world and dimming") {
  CHECK(distance(gray_world_illuminant(Image::filled(3, 3, {128, 128, 128})), d65_uv()) < 1e-12);
  Image two = Image::filled(2, 1, {255, 0, 0});
  two.set(1, {0, 0, 255});
  const ChromaticityUV want = xyz_uv(rgb_xyz({1.0, 0.0, 1.0}));
  CHECK(distance(gray_world_illuminant(two), want) < 1e-12);
  CHECK_ERROR_CODE(gray_world_illuminant(Image::filled(2, 2, {0, 0, 0})), ErrorCode::Degenerate);
  CHECK_ERROR_CODE(gray_world_illuminant(Image{}), ErrorCode::NoData);

  const Image img = random_image(16, 16, 5);
  CHECK(max_code_diff(dim_image(img, 1.0), img) <= 1);
  const Image half = dim_image(img, 0.5);
  CHECK(frame_power(half, {}) < frame_power(img, {}));
  const Image white = Image::filled(2, 2, {255, 255, 255});
  // Within one 8-bit code of half power.
  CHECK(std::abs(frame_power(dim_image(white, 0.5), {}) / frame_power(white, {}) - 0.5) < 0.005);
  CHECK_ERROR_CODE(dim_image(img, -0.1), ErrorCode::InvalidArgument);
}

TEST_CASE("dynamic target") {
  const AdaptationParams p{0.1, 0.7};
  const std::vector<ChromaticityUV> d65(50, d65_uv());
  SUBCASE("static white content keeps the deployment illuminant reachable") {
    const DeploymentSchedule s = greener(jnd(1) / 10.0, 10.0);
    const auto out = dynamic_target(d65, 5.0, p, jnd(3), s);
    REQUIRE(out.size() == 50);
    CHECK(distance(out[0].illuminant, d65_uv()) < 1e-15);
    for (const auto& smp : out) {
      CHECK(distance(smp.illuminant, smp.target) <= jnd(3) + 1e-15);
      CHECK(distance(smp.original_state, d65_uv()) < 1e-15);
    }
  }
  SUBCASE("zero budget reproduces the target") {
    std::vector<ChromaticityUV> varying;
    for (int k = 0; k < 50; ++k) varying.push_back({d65_uv().u + 0.01 * std::sin(0.3 * k), d65_uv().v});
    const auto out = dynamic_target(varying, 10.0, p, 0.0, greener(1e-3, 20.0));
    for (const auto& smp : out) CHECK(distance(smp.illuminant, smp.target) < 1e-15);
    // With A = A*, both observers see the same sequence, so the states agree.
    for (const auto& smp : out) CHECK(distance(smp.state, smp.original_state) < 1e-12);
  }
  SUBCASE("a step in the content keeps every output within budget") {
    std::vector<ChromaticityUV> step(100, d65_uv());
    for (int k = 50; k < 100; ++k) step[k] = {d65_uv().u - 0.02, d65_uv().v + 0.01};
    const double budget = jnd(2);
    const auto out = dynamic_target(step, 10.0, p, budget, greener(5e-4, 10.0));
    bool any = false;
    for (const auto& smp : out) {
      CHECK(distance(smp.illuminant, smp.target) <= budget * (1.0 + 1e-12));
      any = any || smp.constrained;
    }
    CHECK(any);
    // The original observer drifts toward the new content.
    CHECK(distance(out[99].original_state, d65_uv()) > distance(out[50].original_state, d65_uv()));
  }
  CHECK(dynamic_target({}, 1.0, p, 0.01, greener(1e-4, 1.0)).empty());
  CHECK_ERROR_CODE(dynamic_target(d65, 0.0, p, 0.01, greener(1e-4, 1.0)), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(dynamic_target(d65, 1.0, p, -0.01, greener(1e-4, 1.0)), ErrorCode::InvalidArgument);
}

TEST_CASE("frame power matches the scene's own histogram") {
  test::TempDir dir("energy");
  const fs::path in = dir / "in";
  fs::create_directories(in);
  const Image& img = sample_image();
  for (int k = 0; k < 5; ++k) write_image(in / ("f" + std::to_string(k) + ".png"), img);
  const ColorHistogram h = build_histogram(std::vector<fs::path>{in / "f0.png"}, 256);
  SequenceOptions opt;
  opt.fps = 2.0;
  opt.write_frames = false;
  const SequenceReport r = process_sequence(in, dir / "out", greener(0.01, 2.0), opt);
  for (const auto& f : r.frames) {
    const double want = illuminant_power(f.illuminant, h, opt.params, opt.clip);
    CHECK(std::abs(f.power - want) / want < 1e-6);
  }
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("gray world tracks a known shift") {
  const Image& img = sample_image();
  const ChromaticityUV before = gray_world_illuminant(img);
  for (double phi : {1.47, 2.256, 4.0}) {
    const ChromaticityUV shift{0.01 * std::cos(phi), 0.01 * std::sin(phi)};
    const Image shifted = apply_shift_image(img, cat_from_d65(d65_uv() + shift), ClipPolicy::Clamp);
    const ChromaticityUV after = gray_world_illuminant(shifted);
    CHECK(distance(after - before, shift) < 1e-3);
  }
}
