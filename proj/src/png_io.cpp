#include "warpfake/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "warpfake/checkpoint.hpp"

namespace warpfake {

std::vector<std::uint8_t> encode_png(const ImageBuffer& image) {
  std::vector<std::uint8_t> pixels(image.data().size());
  const std::span<const float> src = image.data();
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(src[i], 0.0f, 1.0f) * 255.0f));
  }
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG size query failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw FormatError(std::string("PNG decode failed: ") + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  if (png.width == 0 || png.height == 0 || png.width > 1u << 15 || png.height > 1u << 15) {
    png_image_free(&png);
    throw FormatError("PNG dimensions out of range");
  }
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw FormatError(std::string("PNG decode failed: ") + png.message);
  }
  std::vector<float> data(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) data[i] = pixels[i] / 255.0f;
  return ImageBuffer(static_cast<int>(png.width), static_cast<int>(png.height), std::move(data));
}

ImageBuffer read_png(const std::filesystem::path& path) {
  try {
    return decode_png(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const ImageBuffer& image) {
  write_file_atomic(path, encode_png(image));
}

}  // namespace warpfake
