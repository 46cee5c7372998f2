#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cagan/datamodel.hpp"

namespace cagan {

// Raw 8-bit raster, interleaved channels.
struct Raster8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

Raster8 read_png8(const std::filesystem::path& path);
// Writes an 8-bit PNG; channels must be 1 or 3.
void write_png8(const std::filesystem::path& path, const Raster8& raster);

// Loads an 8-bit PNG as an image with values v / 127.5 - 1. The file is
// converted to the requested channel count (1 = luminance, 3 = RGB).
ImageTensor read_image(const std::filesystem::path& path, int channels);
void write_image(const std::filesystem::path& path, const ImageTensor& image);

// Value mapping used by read_image / write_image.
inline float byte_to_unit(std::uint8_t v) { return static_cast<float>(v) / 127.5f - 1.0f; }
std::uint8_t unit_to_byte(float v);

}  // namespace cagan
