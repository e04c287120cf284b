#pragma once

// Still-image decoding and encoding for the CLI and service boundary.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "palmroi/image.hpp"

namespace palmroi {

/// Decodes JPEG/PNG/BMP/PPM bytes to RGB. Throws DataError when the bytes
/// are not a decodable image.
Image decode_image(std::span<const std::uint8_t> bytes);
Image read_image(const std::filesystem::path& path);

/// Format chosen from the extension (".png", ".jpg", ".bmp", ".ppm").
void write_image(const Image& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_image(const Image& img, const std::string& ext = ".png");

}  // namespace palmroi
