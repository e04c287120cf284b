#pragma once

// Embedding, normalisation and inner-product scoring of palmprint ROIs.

#include <cstdint>
#include <mutex>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "palmroi/image.hpp"
#include "palmroi/pipeline.hpp"

namespace palmroi {

inline constexpr std::size_t kFeatureDim = 512;
inline constexpr int kEmbedInputSize = 224;
/// Operating threshold calibrated at FAR = 1e-4.
inline constexpr double kDefaultThreshold = 0.5014;

class FeatureVector {
 public:
  FeatureVector() : values_(kFeatureDim, 0.0) {}
  /// Throws std::invalid_argument unless `values` has kFeatureDim entries.
  explicit FeatureVector(std::vector<double> values, bool normalized = false);

  std::span<const double> values() const { return values_; }
  bool normalized() const { return normalized_; }
  double norm() const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::vector<double> values_;
  bool normalized_ = false;
};

/// Palmprint embedder contract: a kEmbedInputSize square RGB raster in, an
/// un-normalised FeatureVector out. Callers use embed_raster().
class EmbedderBackend {
 public:
  virtual ~EmbedderBackend() = default;

  FeatureVector embed_raster(const Image& roi) const;
  virtual bool concurrent_safe() const { return true; }

 protected:
  virtual FeatureVector do_embed(const Image& roi) const = 0;

 private:
  mutable std::mutex call_mutex_;
};

/// Deterministic test embedder. The raster is box-averaged onto a 16x16
/// grey grid, mean-centred and pushed through a seeded Gaussian 512x256
/// projection.
class StubEmbedder final : public EmbedderBackend {
 public:
  static constexpr int kGrid = 16;

  explicit StubEmbedder(std::uint64_t seed = 0);

 protected:
  FeatureVector do_embed(const Image& roi) const override;

 private:
  std::vector<double> projection_;  // kFeatureDim x kGrid^2, row-major
};

enum class MatchOutcome { success, fail };

std::string_view to_string(MatchOutcome outcome);

struct MatchDecision {
  double score = 0.0;
  double threshold = kDefaultThreshold;
  MatchOutcome outcome = MatchOutcome::fail;
};

/// Resizes to kEmbedInputSize when needed, then calls the backend. Backend
/// exceptions surface as BackendFailure.
FeatureVector embed(const RoiImage& roi, const EmbedderBackend& embedder);
FeatureVector embed(const Image& roi, const EmbedderBackend& embedder);

FeatureVector normalize(const FeatureVector& f);

/// Inner product of two normalised features, clamped to [-1, 1].
double score(const FeatureVector& f1, const FeatureVector& f2);

MatchDecision decide(double s, double t);

MatchDecision verify_pair(const RoiImage& roi1, const RoiImage& roi2, const EmbedderBackend& embedder,
                          double threshold = kDefaultThreshold);

struct GalleryMatch {
  std::size_t index = 0;
  double score = 0.0;
};

/// Best-scoring gallery entry, lowest index on ties.
GalleryMatch match_against_gallery(const FeatureVector& probe, std::span<const FeatureVector> gallery);

}  // namespace palmroi
