#pragma once

// Shared generators and reference implementations for the test binaries.
// The reference code here is written from the definitions, independently of
// src/, and is what the library is checked against.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "palmroi/dataset.hpp"
#include "palmroi/eval.hpp"
#include "palmroi/geometry.hpp"
#include "palmroi/image.hpp"
#include "palmroi/matching.hpp"
#include "palmroi/pipeline.hpp"

namespace palmroi::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline Point2D rotate(Point2D p, double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

/// A plausible hand: three finger gaps on a slightly bent line, the thumb
/// gap (when present) off to the palm side.
inline PalmAnnotation random_annotation(Rng& rng, double width = 640, double height = 480) {
  for (;;) {
    PalmAnnotation ann;
    ann.image_width = width;
    ann.image_height = height;
    ann.hand = uniform_int(rng, 0, 1) ? Hand::right : Hand::left;
    const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double spacing = uniform(rng, 15.0, 50.0);
    const Point2D dir{std::cos(phi), std::sin(phi)};
    const Point2D nrm{-dir.y, dir.x};
    const Point2D mid{uniform(rng, 0.3, 0.7) * width, uniform(rng, 0.3, 0.7) * height};
    for (int i = 0; i < 3; ++i) {
      const double along = (i - 1) * spacing * uniform(rng, 0.8, 1.2);
      const double off = uniform(rng, -0.2, 0.2) * spacing;
      ann.gaps[i] = mid + along * dir + off * nrm;
    }
    // Palm lies on the +nrm side of this construction.
    if (uniform_int(rng, 0, 3) == 0) {
      const Point2D ab = midpoint(ann.gaps[1], ann.gaps[2]) - midpoint(ann.gaps[0], ann.gaps[1]);
      ann.palm_side = cross(ab, nrm) > 0 ? PalmSide::pos_normal : PalmSide::neg_normal;
    } else {
      ann.thumb_gap = mid - 1.8 * spacing * dir + uniform(rng, 1.0, 2.5) * spacing * nrm;
    }
    const auto inside = [&](Point2D p) { return p.x >= 0 && p.y >= 0 && p.x <= width && p.y <= height; };
    bool ok = std::all_of(ann.gaps.begin(), ann.gaps.end(), inside);
    if (ann.thumb_gap) ok = ok && inside(*ann.thumb_gap);
    if (ok) return ann;
  }
}

/// Reference construction of the ROI corners, straight from the definition:
/// A, B are gap-pair midpoints, C sits 1.5|AB| from O towards the palm, and
/// the ROI square of side 2.5|AB| is centred 1.5|AB| from O on C's side.
/// Corners are returned TL, TR, BR, BL in the ROI raster.
inline std::array<Point2D, 4> reference_corners(const PalmAnnotation& ann) {
  const Point2D a = midpoint(ann.gaps[0], ann.gaps[1]);
  const Point2D b = midpoint(ann.gaps[1], ann.gaps[2]);
  const Point2D o = midpoint(a, b);
  const double u = distance(a, b);
  const Point2D d{(b.x - a.x) / u, (b.y - a.y) / u};
  Point2D towards_palm{-d.y, d.x};
  if (ann.thumb_gap) {
    if (dot(towards_palm, *ann.thumb_gap - o) < 0) towards_palm = -1.0 * towards_palm;
  } else if (ann.palm_side == PalmSide::neg_normal) {
    towards_palm = -1.0 * towards_palm;
  }
  // Looking from the fingers towards the wrist: "down" in the ROI raster is
  // towards the palm; "right" is down turned 90 degrees counter-clockwise
  // on screen, i.e. clockwise in the y-down pixel plane.
  const Point2D down = towards_palm;
  const Point2D right{down.y, -down.x};
  const Point2D centre = o + (1.5 * u) * down;
  const double h = 1.25 * u;
  return {centre - h * right - h * down, centre + h * right - h * down, centre + h * right + h * down,
          centre - h * right + h * down};
}

/// Exhaustive farthest pair: scan every (i, j), i < j, keep the first
/// strictly larger distance.
inline std::pair<std::size_t, std::size_t> reference_farthest(const std::vector<Point2D>& pts) {
  std::pair<std::size_t, std::size_t> best{0, 1};
  double best_d = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double d = distance(pts[i], pts[j]);
      if (d > best_d) {
        best_d = d;
        best = {i, j};
      }
    }
  }
  return best;
}

// EER by direct counting at -inf, every midpoint between adjacent distinct
// scores, and +inf; linear interpolation between the two sweep points that
// straddle FAR = FRR.
inline double reference_eer(const ScoreSet& s) {
  std::vector<double> all = s.genuine;
  all.insert(all.end(), s.impostor.begin(), s.impostor.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> ts{-std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < all.size(); ++i) ts.push_back(0.5 * (all[i] + all[i + 1]));
  ts.push_back(std::numeric_limits<double>::infinity());

  double pf = 0, pr = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    double far = 0, frr = 0;
    for (double v : s.impostor) far += v >= ts[k];
    for (double v : s.genuine) frr += v < ts[k];
    far /= s.impostor.size();
    frr /= s.genuine.size();
    if (far - frr <= 0) {
      if (far == frr) return far;
      const double l = (pf - pr) / ((pf - pr) - (far - frr));
      return pf + l * (far - pf);
    }
    pf = far;
    pr = frr;
  }
  return -1;
}

/// Seeded textured test image: smooth colour gradients plus noise.
inline Image random_image(Rng& rng, int w, int h) {
  Image img(w, h);
  const double fx = uniform(rng, 0.01, 0.08), fy = uniform(rng, 0.01, 0.08);
  const double p0 = uniform(rng, 0, 6.28), p1 = uniform(rng, 0, 6.28);
  std::uniform_int_distribution<int> noise(-20, 20);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t* px = img.px(x, y);
      const double base = 128 + 80 * std::sin(fx * x + p0) * std::cos(fy * y + p1);
      for (int c = 0; c < 3; ++c) {
        const double v = base + 30 * c - 30 + noise(rng);
        px[c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  return img;
}

inline SampleId random_id(Rng& rng) {
  SampleId id;
  id.subject = uniform_int(rng, 1, 999);
  id.session = uniform_int(rng, 1, 2);
  id.device = uniform_int(rng, 0, 1) ? Device::xiaomi : Device::huawei;
  id.hand = uniform_int(rng, 0, 1) ? Hand::right : Hand::left;
  id.index = uniform_int(rng, 1, 99);
  return id;
}

/// subjects x 2 hands x per_hand images, all on session 1 / Huawei.
inline Manifest synthetic_manifest(int subjects, int per_hand) {
  std::vector<ManifestEntry> entries;
  for (int s = 1; s <= subjects; ++s) {
    for (Hand h : {Hand::left, Hand::right}) {
      for (int i = 1; i <= per_hand; ++i) {
        ManifestEntry e;
        e.id = SampleId{s, 1, Device::huawei, h, i};
        e.image = format_name(e.id);
        entries.push_back(e);
      }
    }
  }
  return Manifest(std::move(entries));
}

inline FeatureVector random_unit(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(kFeatureDim);
  for (double& x : v) x = n(rng);
  return normalize(FeatureVector(std::move(v)));
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  static Rng rng(std::random_device{}());
  const fs::path dir = fs::temp_directory_path() / ("palmroi_" + tag + "_" + std::to_string(rng() % 1000000000));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace palmroi::testing
