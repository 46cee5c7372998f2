#include "cagan/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "cagan/errors.hpp"

namespace cagan {

Raster8 read_png8(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG '" + path.string() + "': " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Raster8 out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.channels = color ? 3 : 1;
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG '" + path.string() + "': " + message);
  }
  return out;
}

void write_png8(const std::filesystem::path& path, const Raster8& raster) {
  if (raster.channels != 1 && raster.channels != 3) {
    throw IoError("write_png8: unsupported channel count " + std::to_string(raster.channels));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width);
  image.height = static_cast<png_uint_32>(raster.height);
  image.format = raster.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, raster.pixels.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + image.message);
  }
}

std::uint8_t unit_to_byte(float v) {
  const float scaled = std::round((std::clamp(v, -1.0f, 1.0f) + 1.0f) * 127.5f);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0f, 255.0f));
}

ImageTensor read_image(const std::filesystem::path& path, int channels) {
  if (channels != 1 && channels != 3) throw ConfigError("read_image: channels must be 1 or 3");
  const Raster8 r = read_png8(path);
  ImageTensor img(channels, r.height, r.width);
  for (int y = 0; y < r.height; ++y) {
    for (int x = 0; x < r.width; ++x) {
      const std::uint8_t* px = &r.pixels[(static_cast<std::size_t>(y) * r.width + x) * r.channels];
      if (channels == r.channels) {
        for (int c = 0; c < channels; ++c) img.at(c, y, x) = byte_to_unit(px[c]);
      } else if (channels == 3) {
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = byte_to_unit(px[0]);
      } else {
        // ITU-R BT.601 luma, rounded back to 8 bits so gray files and
        // converted RGB files land on the same value grid.
        const double luma = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        img.at(0, y, x) = byte_to_unit(static_cast<std::uint8_t>(std::lround(luma)));
      }
    }
  }
  return img;
}

void write_image(const std::filesystem::path& path, const ImageTensor& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw ShapeError("write_image: image must have 1 or 3 channels");
  }
  Raster8 r;
  r.width = image.width();
  r.height = image.height();
  r.channels = image.channels();
  r.pixels.resize(static_cast<std::size_t>(r.width) * r.height * r.channels);
  for (int y = 0; y < r.height; ++y) {
    for (int x = 0; x < r.width; ++x) {
      for (int c = 0; c < r.channels; ++c) {
        r.pixels[(static_cast<std::size_t>(y) * r.width + x) * r.channels + c] = unit_to_byte(image.at(c, y, x));
      }
    }
  }
  write_png8(path, r);
}

}  // namespace cagan
