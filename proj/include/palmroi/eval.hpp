#pragma once

// Evaluation protocols for both stages: verification score sets (EER,
// TPR@FAR, Top-1) and detection quality (keypoint miss rate vs FPPI, LAMR,
// box mAP).

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "palmroi/dataset.hpp"
#include "palmroi/matching.hpp"
#include "palmroi/pipeline.hpp"

namespace palmroi {

struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

using FeatureMap = std::map<SampleId, FeatureVector>;

struct ImpostorSampling {
  enum class Mode { automatic, full, sampled };

  Mode mode = Mode::automatic;
  std::size_t count = 0;  // pairs drawn in sampled mode
  std::uint64_t seed = kDefaultSeed;

  /// automatic: full enumeration up to this many impostor pairs, otherwise
  /// `count` (or this many, when count is 0) sampled pairs.
  static constexpr std::size_t kFullLimit = 10'000'000;

  static ImpostorSampling full() { return {Mode::full, 0, kDefaultSeed}; }
  static ImpostorSampling sampled(std::size_t n, std::uint64_t seed) { return {Mode::sampled, n, seed}; }
};

/// Genuine pairs: every unordered pair of one palm identity. Impostor
/// pairs: cross-identity pairs, enumerated or sampled without replacement.
ScoreSet gen_pairs(const Manifest& subset, const FeatureMap& features, ImpostorSampling sampling = {});

/// Fraction of impostor scores >= t.
double far_at(const ScoreSet& s, double t);
/// Fraction of genuine scores < t.
double frr_at(const ScoreSet& s, double t);

/// Equal error rate over a sweep of all distinct scores, linearly
/// interpolated where FAR - FRR changes sign.
double eer(const ScoreSet& s);

struct CalibrationResult {
  double far_target = 0.0;
  double threshold = 0.0;
  double achieved_far = 0.0;
  double tpr = 0.0;
  /// No observed score reaches the target; the threshold sits one ulp
  /// above the largest impostor score.
  bool unreachable = false;
};

inline constexpr std::array<double, 4> kFarTargets{1e-1, 1e-2, 1e-3, 1e-4};

/// For each target: the smallest observed score t with FAR(t) <= target,
/// under the decision rule score >= t.
std::vector<CalibrationResult> tpr_at_far(const ScoreSet& s, std::span<const double> far_targets = kFarTargets);

/// Mean Top-1 identification accuracy over `repeats` random draws of one
/// gallery image per palm (seeds seed, seed + 1, ...).
double top1(const Manifest& subset, const FeatureMap& features, std::uint64_t seed = kDefaultSeed,
            int repeats = 10);

struct ScoredPoint {
  Point2D point;
  double confidence = 1.0;
};

struct KeypointMatch {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t misses = 0;
};

inline constexpr double kDefaultDelta = 10.0;

/// Greedy one-to-one matching in descending confidence; a detection claims
/// the nearest unmatched ground truth strictly closer than delta.
KeypointMatch keypoint_match(std::span<const Point2D> gts, std::span<const ScoredPoint> dets,
                             double delta = kDefaultDelta);

struct ImageKeypoints {
  std::vector<Point2D> gts;
  std::vector<ScoredPoint> dets;
};

struct DetPoint {
  double fppi = 0.0;
  double miss_rate = 0.0;
  double threshold = 0.0;
};

struct DetCurve {
  std::vector<DetPoint> points;  // ascending fppi
};

/// Miss rate against false positives per image, one point per confidence
/// threshold. With no thresholds given, every distinct confidence is used
/// plus one threshold above all of them.
DetCurve miss_rate_fppi(std::span<const ImageKeypoints> images, std::vector<double> thresholds = {},
                        double delta = kDefaultDelta);

/// The nine log-spaced FPPI reference rates 10^-3 ... 10^1.
std::array<double, 9> lamr_reference_points();

/// Log-average miss rate over the nine reference rates.
double lamr(const DetCurve& curve);

struct DetectionScene {
  std::vector<BoxSpec> gts;
  std::vector<DetectionBox> dets;
};

struct DetectionEval {
  std::array<double, 2> ap{};  // indexed by BoxClass
  double map = 0.0;
};

double iou(const BoxSpec& a, const BoxSpec& b);

/// Per-class AP (greedy IoU matching, all-point interpolation) and its mean
/// over the two classes.
DetectionEval map_detection(std::span<const DetectionScene> scenes, double iou_threshold = 0.5);
DetectionEval map_detection(const std::vector<BoxSpec>& gts, const std::vector<DetectionBox>& dets,
                            double iou_threshold = 0.5);

/// Box centres of one class as keypoints, for miss-rate evaluation.
std::vector<ImageKeypoints> keypoint_view(std::span<const DetectionScene> scenes, BoxClass cls);

}  // namespace palmroi
