#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "chroma/colorimetry.hpp"

namespace chroma {

/// Interleaved 8-bit sRGB-encoded image.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  Rgb8 at(std::size_t i) const { return {pixels[3 * i], pixels[3 * i + 1], pixels[3 * i + 2]}; }
  void set(std::size_t i, const Rgb8& c) {
    pixels[3 * i] = c[0];
    pixels[3 * i + 1] = c[1];
    pixels[3 * i + 2] = c[2];
  }

  static Image filled(int width, int height, const Rgb8& c);
};

/// Reads PNG, JPEG or binary/ASCII PPM, chosen by file signature.
/// Throws Error(Io) or Error(Format).
Image read_image(const std::filesystem::path& path);

/// Writes PNG for a .png extension, binary PPM otherwise.
void write_image(const std::filesystem::path& path, const Image& image);

/// Writes an 8-bit grayscale PGM (P5).
void write_pgm(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> gray);

bool has_image_extension(const std::filesystem::path& path);

/// Regular image files in a directory, sorted by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace chroma
