#pragma once

// Sidecar annotation files (<image-stem>.ann.json):
//
//   {
//     "P1": {"x": 120.5, "y": 300.0},      optional thumb-gap point
//     "P2": {"x": ..., "y": ...},          required
//     "P3": {"x": ..., "y": ...},          required
//     "P4": {"x": ..., "y": ...},          required
//     "hand": "l" | "r",
//     "palm_side": "pos_normal" | "neg_normal",   optional
//     "image_width": 640, "image_height": 480      optional
//   }
//
// When the image size is absent from the file the caller supplies it (it is
// normally taken from the decoded image).

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "palmroi/geometry.hpp"

namespace palmroi {

using ImageSize = std::pair<double, double>;

PalmAnnotation parse_annotation(std::string_view json_text, std::optional<ImageSize> size = std::nullopt);
std::string serialize_annotation(const PalmAnnotation& ann);

PalmAnnotation load_annotation(const std::filesystem::path& path, std::optional<ImageSize> size = std::nullopt);
void save_annotation(const PalmAnnotation& ann, const std::filesystem::path& path);

/// <dir>/<stem>.ann.json for an image path.
std::filesystem::path sidecar_path(const std::filesystem::path& image);

}  // namespace palmroi
