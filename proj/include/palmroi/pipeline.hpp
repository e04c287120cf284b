#pragma once

// ROI extraction: detector output -> keypoints -> local frame -> resampled ROI.

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "palmroi/errors.hpp"
#include "palmroi/geometry.hpp"
#include "palmroi/image.hpp"

namespace palmroi {

inline constexpr double kDefaultConfMin = 0.25;
inline constexpr int kDefaultRoiSize = 224;

struct DetectionBox {
  BoxClass class_id = BoxClass::double_finger_gap;
  double confidence = 1.0;
  Point2D center;
  double width = 0.0;
  double height = 0.0;
};

/// Raised when the detections do not contain two finger-gap boxes and one
/// palm-centre box above the confidence floor.
class IncompleteDetection : public PipelineError {
 public:
  explicit IncompleteDetection(std::vector<BoxClass> missing);
  const std::vector<BoxClass>& missing() const noexcept { return missing_; }

 private:
  std::vector<BoxClass> missing_;
};

/// Keypoint detector contract. Implementations override do_detect();
/// callers go through detect(), which serialises access for backends that
/// declare themselves single-caller.
class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;

  std::vector<DetectionBox> detect(const Image& image) const;
  virtual bool concurrent_safe() const { return true; }

 protected:
  virtual std::vector<DetectionBox> do_detect(const Image& image) const = 0;

 private:
  mutable std::mutex call_mutex_;
};

/// Test backend that replays the ground-truth boxes of one annotation,
/// optionally with seeded Gaussian jitter on the box centres. The image is
/// ignored. Every call with the same seed yields the same boxes.
class OracleDetector final : public DetectorBackend {
 public:
  OracleDetector(PalmAnnotation ann, BoxSizing sizing = {}, double jitter_sigma = 0.0,
                 std::uint64_t seed = 0);

 protected:
  std::vector<DetectionBox> do_detect(const Image& image) const override;

 private:
  PalmAnnotation ann_;
  BoxSizing sizing_;
  double jitter_sigma_;
  std::uint64_t seed_;
};

/// Always returns no detections.
class EmptyDetector final : public DetectorBackend {
 protected:
  std::vector<DetectionBox> do_detect(const Image&) const override { return {}; }
};

std::unique_ptr<DetectorBackend> oracle_detector(const PalmAnnotation& ann, const BoxSizing& sizing = {},
                                                 double jitter_sigma = 0.0, std::uint64_t seed = 0);

struct RoiImage {
  Image pixels;
  std::string source_id;
  RoiQuad quad;
};

/// Picks (A, B) as the farthest pair of finger-gap centres and C as the most
/// confident palm-centre box. Ties go to the earliest pair / box in input
/// order.
KeypointTriple select_keypoints(const std::vector<DetectionBox>& dets, double conf_min = kDefaultConfMin);

/// Resamples the ROI square spanned by the frame of `triple` into an
/// out_size x out_size raster (bilinear, clamp-to-edge).
RoiImage extract_roi(const Image& image, const KeypointTriple& triple, int out_size = kDefaultRoiSize,
                     std::string source_id = {});

RoiImage run_pipeline(const Image& image, const DetectorBackend& detector,
                      double conf_min = kDefaultConfMin, int out_size = kDefaultRoiSize,
                      std::string source_id = {});

}  // namespace palmroi
