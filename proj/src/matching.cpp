#include "palmroi/matching.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "palmroi/errors.hpp"

namespace palmroi {

FeatureVector::FeatureVector(std::vector<double> values, bool normalized)
    : values_(std::move(values)), normalized_(normalized) {
  if (values_.size() != kFeatureDim) {
    throw std::invalid_argument("feature vector must have " + std::to_string(kFeatureDim) +
                                " components, got " + std::to_string(values_.size()));
  }
}

double FeatureVector::norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

FeatureVector EmbedderBackend::embed_raster(const Image& roi) const {
  if (concurrent_safe()) return do_embed(roi);
  std::lock_guard lock(call_mutex_);
  return do_embed(roi);
}

StubEmbedder::StubEmbedder(std::uint64_t seed) : projection_(kFeatureDim * kGrid * kGrid) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / kGrid);
  for (double& w : projection_) w = gauss(rng);
}

FeatureVector StubEmbedder::do_embed(const Image& roi) const {
  if (roi.empty()) throw std::invalid_argument("stub embedder: empty raster");
  constexpr int cells = kGrid * kGrid;
  std::vector<double> grid(cells, 0.0);
  for (int gy = 0; gy < kGrid; ++gy) {
    const int y0 = gy * roi.height / kGrid, y1 = std::max(y0 + 1, (gy + 1) * roi.height / kGrid);
    for (int gx = 0; gx < kGrid; ++gx) {
      const int x0 = gx * roi.width / kGrid, x1 = std::max(x0 + 1, (gx + 1) * roi.width / kGrid);
      double sum = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const std::uint8_t* p = roi.px(std::min(x, roi.width - 1), std::min(y, roi.height - 1));
          sum += 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        }
      }
      grid[gy * kGrid + gx] = sum / (255.0 * (y1 - y0) * (x1 - x0));
    }
  }
  double mean = 0.0;
  for (double g : grid) mean += g;
  mean /= cells;
  for (double& g : grid) g -= mean;

  std::vector<double> out(kFeatureDim, 0.0);
  for (std::size_t r = 0; r < kFeatureDim; ++r) {
    const double* row = projection_.data() + r * cells;
    double acc = 0.0;
    for (int c = 0; c < cells; ++c) acc += row[c] * grid[c];
    out[r] = acc;
  }
  return FeatureVector(std::move(out));
}

std::string_view to_string(MatchOutcome outcome) {
  return outcome == MatchOutcome::success ? "success" : "fail";
}

FeatureVector embed(const Image& roi, const EmbedderBackend& embedder) {
  if (roi.empty()) throw DataError("embed: empty ROI");
  if (roi.width != roi.height) throw DataError("embed: ROI must be square");
  const Image input = resize_bilinear(roi, kEmbedInputSize, kEmbedInputSize);
  FeatureVector f;
  try {
    f = embedder.embed_raster(input);
  } catch (const std::exception& e) {
    throw BackendFailure(std::string("embedder failed: ") + e.what());
  }
  return FeatureVector(std::vector<double>(f.values().begin(), f.values().end()), false);
}

FeatureVector embed(const RoiImage& roi, const EmbedderBackend& embedder) {
  return embed(roi.pixels, embedder);
}

FeatureVector normalize(const FeatureVector& f) {
  const double n = f.norm();
  if (!(n > 0.0)) throw ZeroVector("cannot normalise a zero feature vector");
  std::vector<double> out(f.values().begin(), f.values().end());
  for (double& v : out) v /= n;
  return FeatureVector(std::move(out), true);
}

double score(const FeatureVector& f1, const FeatureVector& f2) {
  if (!f1.normalized() || !f2.normalized()) {
    throw NotNormalized("score requires l2-normalised features");
  }
  const auto a = f1.values();
  const auto b = f2.values();
  double s = 0.0;
  for (std::size_t i = 0; i < kFeatureDim; ++i) s += a[i] * b[i];
  return std::clamp(s, -1.0, 1.0);
}

MatchDecision decide(double s, double t) {
  return {s, t, s >= t ? MatchOutcome::success : MatchOutcome::fail};
}

MatchDecision verify_pair(const RoiImage& roi1, const RoiImage& roi2, const EmbedderBackend& embedder,
                          double threshold) {
  const FeatureVector f1 = normalize(embed(roi1, embedder));
  const FeatureVector f2 = normalize(embed(roi2, embedder));
  return decide(score(f1, f2), threshold);
}

GalleryMatch match_against_gallery(const FeatureVector& probe, std::span<const FeatureVector> gallery) {
  if (gallery.empty()) throw EmptyGallery("gallery is empty");
  GalleryMatch best{0, score(probe, gallery[0])};
  for (std::size_t i = 1; i < gallery.size(); ++i) {
    const double s = score(probe, gallery[i]);
    if (s > best.score) best = {i, s};
  }
  return best;
}

}  // namespace palmroi
