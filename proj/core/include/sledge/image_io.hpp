#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "sledge/canvas.hpp"
#include "sledge/compositor.hpp"

namespace sledge {

/// RGBA PNG. Encoding is deterministic for a given raster.
std::string encode_png(const Canvas& canvas);
/// Any PNG; grey/RGB inputs are expanded to opaque RGBA.
Canvas decode_png(std::string_view bytes);

/// 8-bit greyscale PNG with values {0, 255}.
std::string encode_mask_png(const Mask& mask);
/// Throws corrupt_document for values other than 0/255 or non-grey images.
Mask decode_mask_png(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

std::string sha256_hex(std::string_view bytes);
std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace sledge
