#include "palmroi/pipeline.hpp"

#include <random>
#include <stdexcept>

namespace palmroi {

namespace {

std::string describe_missing(const std::vector<BoxClass>& missing) {
  std::string msg = "incomplete detection: missing";
  for (BoxClass cls : missing) {
    msg += ' ';
    msg += to_string(cls);
  }
  return msg;
}

}  // namespace

IncompleteDetection::IncompleteDetection(std::vector<BoxClass> missing)
    : PipelineError(describe_missing(missing)), missing_(std::move(missing)) {}

std::vector<DetectionBox> DetectorBackend::detect(const Image& image) const {
  if (concurrent_safe()) return do_detect(image);
  std::lock_guard lock(call_mutex_);
  return do_detect(image);
}

OracleDetector::OracleDetector(PalmAnnotation ann, BoxSizing sizing, double jitter_sigma,
                               std::uint64_t seed)
    : ann_(std::move(ann)), sizing_(sizing), jitter_sigma_(jitter_sigma), seed_(seed) {
  if (!(jitter_sigma >= 0.0)) throw std::invalid_argument("jitter sigma must be non-negative");
}

std::vector<DetectionBox> OracleDetector::do_detect(const Image&) const {
  std::mt19937_64 rng(seed_);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<DetectionBox> out;
  for (const BoxSpec& box : boxes_from_annotation(ann_, sizing_)) {
    DetectionBox det{box.class_id, 1.0, box.center, box.width, box.height};
    if (jitter_sigma_ > 0.0) {
      det.center.x += jitter_sigma_ * noise(rng);
      det.center.y += jitter_sigma_ * noise(rng);
    }
    out.push_back(det);
  }
  return out;
}

std::unique_ptr<DetectorBackend> oracle_detector(const PalmAnnotation& ann, const BoxSizing& sizing,
                                                 double jitter_sigma, std::uint64_t seed) {
  return std::make_unique<OracleDetector>(ann, sizing, jitter_sigma, seed);
}

KeypointTriple select_keypoints(const std::vector<DetectionBox>& dets, double conf_min) {
  if (!(conf_min >= 0.0 && conf_min <= 1.0)) throw std::invalid_argument("conf_min must lie in [0, 1]");

  std::vector<Point2D> gaps;
  const DetectionBox* palm = nullptr;
  for (const auto& d : dets) {
    if (d.confidence < conf_min) continue;
    if (d.class_id == BoxClass::double_finger_gap) {
      gaps.push_back(d.center);
    } else if (palm == nullptr || d.confidence > palm->confidence) {
      palm = &d;
    }
  }

  std::vector<BoxClass> missing;
  if (gaps.size() < 2) missing.push_back(BoxClass::double_finger_gap);
  if (palm == nullptr) missing.push_back(BoxClass::palm_center);
  if (!missing.empty()) throw IncompleteDetection(std::move(missing));

  std::size_t best_i = 0, best_j = 1;
  double best = -1.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    for (std::size_t j = i + 1; j < gaps.size(); ++j) {
      const Point2D d = gaps[j] - gaps[i];
      const double d2 = d.x * d.x + d.y * d.y;
      if (d2 > best) {
        best = d2;
        best_i = i;
        best_j = j;
      }
    }
  }
  return {gaps[best_i], gaps[best_j], palm->center};
}

RoiImage extract_roi(const Image& image, const KeypointTriple& triple, int out_size,
                     std::string source_id) {
  if (image.empty()) throw std::invalid_argument("extract_roi: empty image");
  if (out_size <= 0) throw std::invalid_argument("extract_roi: out_size must be positive");

  const RoiQuad quad = roi_quad(frame_from_triple(triple));
  const Point2D tl = quad.corners[0];
  const Point2D step_x = (1.0 / out_size) * (quad.corners[1] - tl);
  const Point2D step_y = (1.0 / out_size) * (quad.corners[3] - tl);
  // Maps ROI raster coordinates onto the rotated square in the source image.
  const Affine2D roi_to_image{{step_x.x, step_y.x, tl.x, step_x.y, step_y.y, tl.y}};
  return {warp(image, roi_to_image, out_size, out_size, Border::clamp), std::move(source_id), quad};
}

RoiImage run_pipeline(const Image& image, const DetectorBackend& detector, double conf_min,
                      int out_size, std::string source_id) {
  const KeypointTriple triple = select_keypoints(detector.detect(image), conf_min);
  return extract_roi(image, triple, out_size, std::move(source_id));
}

}  // namespace palmroi
