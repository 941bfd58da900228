#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "warpfake/raster.hpp"

namespace warpfake {

/// 8-bit RGB PNG; channel values are quantized as round(v * 255).
std::vector<std::uint8_t> encode_png(const ImageBuffer& image);
/// Accepts any PNG libpng can convert to 8-bit RGB (gray, palette, alpha are
/// flattened). Throws FormatError on undecodable input.
ImageBuffer decode_png(std::span<const std::uint8_t> bytes);

ImageBuffer read_png(const std::filesystem::path& path);
/// Atomic write (temporary file + rename).
void write_png(const std::filesystem::path& path, const ImageBuffer& image);

}  // namespace warpfake
