#include "palmroi/annotation_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "palmroi/errors.hpp"

namespace palmroi {

namespace {

using nlohmann::json;

Point2D read_point(const json& doc, const char* key) {
  const auto& p = doc.at(key);
  return {p.at("x").get<double>(), p.at("y").get<double>()};
}

json write_point(Point2D p) { return {{"x", p.x}, {"y", p.y}}; }

}  // namespace

PalmAnnotation parse_annotation(std::string_view json_text, std::optional<ImageSize> size) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("annotation is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("annotation must be a JSON object");

  PalmAnnotation ann;
  try {
    for (const char* key : {"P2", "P3", "P4"}) {
      if (!doc.contains(key)) throw DataError(std::string("annotation lacks required point ") + key);
    }
    ann.gaps = {read_point(doc, "P2"), read_point(doc, "P3"), read_point(doc, "P4")};
    if (doc.contains("P1") && !doc["P1"].is_null()) ann.thumb_gap = read_point(doc, "P1");

    const std::string hand = doc.at("hand").get<std::string>();
    if (hand == "l") {
      ann.hand = Hand::left;
    } else if (hand == "r") {
      ann.hand = Hand::right;
    } else {
      throw DataError("annotation hand must be \"l\" or \"r\"");
    }

    if (doc.contains("palm_side")) {
      const std::string side = doc["palm_side"].get<std::string>();
      if (side == "pos_normal") {
        ann.palm_side = PalmSide::pos_normal;
      } else if (side == "neg_normal") {
        ann.palm_side = PalmSide::neg_normal;
      } else {
        throw DataError("annotation palm_side must be \"pos_normal\" or \"neg_normal\"");
      }
    }

    if (doc.contains("image_width") && doc.contains("image_height")) {
      ann.image_width = doc["image_width"].get<double>();
      ann.image_height = doc["image_height"].get<double>();
    } else if (size) {
      std::tie(ann.image_width, ann.image_height) = *size;
    } else {
      throw DataError("annotation has no image size and none was supplied");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed annotation: ") + e.what());
  }
  validate(ann);
  return ann;
}

std::string serialize_annotation(const PalmAnnotation& ann) {
  json doc;
  if (ann.thumb_gap) doc["P1"] = write_point(*ann.thumb_gap);
  doc["P2"] = write_point(ann.gaps[0]);
  doc["P3"] = write_point(ann.gaps[1]);
  doc["P4"] = write_point(ann.gaps[2]);
  doc["hand"] = ann.hand == Hand::left ? "l" : "r";
  if (ann.palm_side) doc["palm_side"] = *ann.palm_side == PalmSide::pos_normal ? "pos_normal" : "neg_normal";
  doc["image_width"] = ann.image_width;
  doc["image_height"] = ann.image_height;
  return doc.dump(2) + "\n";
}

PalmAnnotation load_annotation(const std::filesystem::path& path, std::optional<ImageSize> size) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read annotation " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_annotation(ss.str(), size);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_annotation(const PalmAnnotation& ann, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write annotation " + path.string());
  out << serialize_annotation(ann);
}

std::filesystem::path sidecar_path(const std::filesystem::path& image) {
  return image.parent_path() / (image.stem().string() + ".ann.json");
}

}  // namespace palmroi
