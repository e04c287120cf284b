#include "palmroi/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_set>

namespace palmroi {

namespace {

void require_scores(const ScoreSet& s) {
  if (s.genuine.empty() || s.impostor.empty()) {
    throw EmptyScores("score set needs both genuine and impostor scores");
  }
}

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Count of values >= t in ascending v.
std::size_t count_at_least(const std::vector<double>& v, double t) {
  return static_cast<std::size_t>(v.end() - std::lower_bound(v.begin(), v.end(), t));
}

std::vector<double> distinct_scores(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> all(a);
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

// Stable ordering of indices by descending confidence.
template <typename Conf>
std::vector<std::size_t> by_confidence(std::size_t n, Conf conf) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return conf(a) > conf(b); });
  return order;
}

}  // namespace

ScoreSet gen_pairs(const Manifest& subset, const FeatureMap& features, ImpostorSampling sampling) {
  std::vector<const FeatureVector*> feats;
  std::vector<PalmIdentity> ids;
  for (const auto& e : subset.entries()) {
    auto it = features.find(e.id);
    if (it == features.end()) throw MissingFeature("no feature for sample " + format_name(e.id));
    feats.push_back(&it->second);
    ids.push_back(identity_of(e.id));
  }

  ScoreSet out;
  const std::size_t n = feats.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (ids[i] == ids[j]) out.genuine.push_back(score(*feats[i], *feats[j]));
    }
  }

  const std::size_t total_pairs = n < 2 ? 0 : n * (n - 1) / 2;
  const std::size_t impostor_pairs = total_pairs - out.genuine.size();
  std::size_t wanted = impostor_pairs;
  switch (sampling.mode) {
    case ImpostorSampling::Mode::full:
      break;
    case ImpostorSampling::Mode::sampled:
      wanted = std::min(sampling.count, impostor_pairs);
      break;
    case ImpostorSampling::Mode::automatic:
      if (impostor_pairs > ImpostorSampling::kFullLimit) {
        wanted = sampling.count > 0 ? sampling.count : ImpostorSampling::kFullLimit;
      }
      break;
  }

  if (wanted == impostor_pairs) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (ids[i] != ids[j]) out.impostor.push_back(score(*feats[i], *feats[j]));
      }
    }
    return out;
  }

  std::mt19937_64 rng(sampling.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::unordered_set<std::uint64_t> seen;
  while (out.impostor.size() < wanted) {
    std::size_t i = pick(rng), j = pick(rng);
    if (i == j || ids[i] == ids[j]) continue;
    if (i > j) std::swap(i, j);
    if (!seen.insert(static_cast<std::uint64_t>(i) * n + j).second) continue;
    out.impostor.push_back(score(*feats[i], *feats[j]));
  }
  return out;
}

double far_at(const ScoreSet& s, double t) {
  if (s.impostor.empty()) throw EmptyScores("no impostor scores");
  const auto n = std::count_if(s.impostor.begin(), s.impostor.end(), [t](double v) { return v >= t; });
  return static_cast<double>(n) / s.impostor.size();
}

double frr_at(const ScoreSet& s, double t) {
  if (s.genuine.empty()) throw EmptyScores("no genuine scores");
  const auto n = std::count_if(s.genuine.begin(), s.genuine.end(), [t](double v) { return v < t; });
  return static_cast<double>(n) / s.genuine.size();
}

double eer(const ScoreSet& s) {
  require_scores(s);
  const auto gen = sorted(s.genuine);
  const auto imp = sorted(s.impostor);
  const double ng = static_cast<double>(gen.size());
  const double ni = static_cast<double>(imp.size());

  std::vector<double> thresholds = distinct_scores(gen, imp);
  thresholds.push_back(std::numeric_limits<double>::infinity());

  double prev_far = 1.0, prev_frr = 0.0;
  for (double t : thresholds) {
    const double far = count_at_least(imp, t) / ni;
    const double frr = (ng - count_at_least(gen, t)) / ng;
    const double diff = far - frr;
    if (diff <= 0.0) {
      if (diff == 0.0) return far;
      const double prev_diff = prev_far - prev_frr;
      const double lambda = prev_diff / (prev_diff - diff);
      return prev_far + lambda * (far - prev_far);
    }
    prev_far = far;
    prev_frr = frr;
  }
  // The +inf threshold always gives FAR 0, FRR 1.
  throw std::logic_error("eer: sweep ended without a crossing");
}

std::vector<CalibrationResult> tpr_at_far(const ScoreSet& s, std::span<const double> far_targets) {
  require_scores(s);
  const auto gen = sorted(s.genuine);
  const auto imp = sorted(s.impostor);
  const auto candidates = distinct_scores(gen, imp);
  const double ng = static_cast<double>(gen.size());
  const double ni = static_cast<double>(imp.size());

  std::vector<CalibrationResult> out;
  for (double target : far_targets) {
    if (!(target > 0.0 && target <= 1.0)) throw std::invalid_argument("FAR target must lie in (0, 1]");
    CalibrationResult r;
    r.far_target = target;
    // FAR is non-increasing in t, so the first feasible candidate is the smallest.
    auto it = std::find_if(candidates.begin(), candidates.end(),
                           [&](double t) { return count_at_least(imp, t) / ni <= target; });
    if (it != candidates.end()) {
      r.threshold = *it;
    } else {
      r.threshold = std::nextafter(imp.back(), std::numeric_limits<double>::infinity());
      r.unreachable = true;
    }
    r.achieved_far = count_at_least(imp, r.threshold) / ni;
    r.tpr = count_at_least(gen, r.threshold) / ng;
    out.push_back(r);
  }
  return out;
}

double top1(const Manifest& subset, const FeatureMap& features, std::uint64_t seed, int repeats) {
  if (repeats < 1) throw std::invalid_argument("top1 needs at least one repeat");
  std::map<PalmIdentity, std::vector<const FeatureVector*>> by_palm;
  for (const auto& e : subset.entries()) {
    auto it = features.find(e.id);
    if (it == features.end()) throw MissingFeature("no feature for sample " + format_name(e.id));
    by_palm[identity_of(e.id)].push_back(&it->second);
  }
  if (by_palm.empty()) throw InsufficientImages("top1: no samples");
  for (const auto& [palm, imgs] : by_palm) {
    if (imgs.size() < 2) {
      throw InsufficientImages("palm " + std::to_string(palm.subject) + "/" +
                               std::string(to_string(palm.hand)) + " has fewer than two images");
    }
  }

  double sum = 0.0;
  for (int r = 0; r < repeats; ++r) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));
    std::vector<FeatureVector> gallery;
    std::vector<std::size_t> chosen;
    for (const auto& [palm, imgs] : by_palm) {
      std::uniform_int_distribution<std::size_t> pick(0, imgs.size() - 1);
      chosen.push_back(pick(rng));
      gallery.push_back(*imgs[chosen.back()]);
    }
    std::size_t correct = 0, probes = 0;
    std::size_t g = 0;
    for (const auto& [palm, imgs] : by_palm) {
      for (std::size_t i = 0; i < imgs.size(); ++i) {
        if (i == chosen[g]) continue;
        ++probes;
        if (match_against_gallery(*imgs[i], gallery).index == g) ++correct;
      }
      ++g;
    }
    sum += static_cast<double>(correct) / probes;
  }
  return sum / repeats;
}

KeypointMatch keypoint_match(std::span<const Point2D> gts, std::span<const ScoredPoint> dets, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  std::vector<bool> taken(gts.size(), false);
  KeypointMatch m;
  for (std::size_t d : by_confidence(dets.size(), [&](std::size_t i) { return dets[i].confidence; })) {
    std::size_t best = gts.size();
    double best_dist = delta;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double dist = distance(gts[g], dets[d].point);
      if (dist < best_dist) {
        best_dist = dist;
        best = g;
      }
    }
    if (best < gts.size()) {
      taken[best] = true;
      ++m.true_positives;
    } else {
      ++m.false_positives;
    }
  }
  m.misses = gts.size() - m.true_positives;
  return m;
}

DetCurve miss_rate_fppi(std::span<const ImageKeypoints> images, std::vector<double> thresholds, double delta) {
  if (images.empty()) throw std::invalid_argument("miss_rate_fppi needs at least one image");
  if (thresholds.empty()) {
    for (const auto& img : images) {
      for (const auto& d : img.dets) thresholds.push_back(d.confidence);
    }
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.push_back(thresholds.empty() ? 1.0 : std::nextafter(thresholds.back(), 2.0));
  }

  std::size_t total_gts = 0;
  for (const auto& img : images) total_gts += img.gts.size();

  DetCurve curve;
  for (double t : thresholds) {
    std::size_t fp = 0, misses = 0;
    for (const auto& img : images) {
      std::vector<ScoredPoint> kept;
      for (const auto& d : img.dets) {
        if (d.confidence >= t) kept.push_back(d);
      }
      const KeypointMatch m = keypoint_match(img.gts, kept, delta);
      fp += m.false_positives;
      misses += m.misses;
    }
    curve.points.push_back({static_cast<double>(fp) / images.size(),
                            total_gts == 0 ? 0.0 : static_cast<double>(misses) / total_gts, t});
  }
  std::sort(curve.points.begin(), curve.points.end(), [](const DetPoint& a, const DetPoint& b) {
    return a.fppi != b.fppi ? a.fppi < b.fppi : a.miss_rate > b.miss_rate;
  });
  return curve;
}

std::array<double, 9> lamr_reference_points() {
  std::array<double, 9> refs{};
  for (int i = 0; i < 9; ++i) refs[i] = std::pow(10.0, -3.0 + 0.5 * i);
  return refs;
}

double lamr(const DetCurve& curve) {
  if (curve.points.empty()) throw std::invalid_argument("lamr: empty curve");
  double max_miss = 0.0;
  for (const auto& p : curve.points) max_miss = std::max(max_miss, p.miss_rate);

  double log_sum = 0.0;
  for (double ref : lamr_reference_points()) {
    double miss = max_miss;
    // Points are ordered by fppi, then by falling miss rate: the last point
    // at or below the reference is the best operating point there.
    for (const auto& p : curve.points) {
      if (p.fppi <= ref) miss = p.miss_rate;
    }
    log_sum += std::log(std::max(miss, 1e-10));
  }
  return std::exp(log_sum / 9.0);
}

double iou(const BoxSpec& a, const BoxSpec& b) {
  const double ix = std::min(a.center.x + 0.5 * a.width, b.center.x + 0.5 * b.width) -
                    std::max(a.center.x - 0.5 * a.width, b.center.x - 0.5 * b.width);
  const double iy = std::min(a.center.y + 0.5 * a.height, b.center.y + 0.5 * b.height) -
                    std::max(a.center.y - 0.5 * a.height, b.center.y - 0.5 * b.height);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.width * a.height + b.width * b.height - inter);
}

DetectionEval map_detection(std::span<const DetectionScene> scenes, double iou_threshold) {
  DetectionEval out;
  for (BoxClass cls : {BoxClass::double_finger_gap, BoxClass::palm_center}) {
    struct Ref {
      std::size_t scene;
      const DetectionBox* det;
    };
    std::vector<Ref> dets;
    std::vector<std::vector<bool>> taken(scenes.size());
    std::size_t n_gt = 0;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      taken[s].assign(scenes[s].gts.size(), false);
      for (const auto& g : scenes[s].gts) n_gt += g.class_id == cls;
      for (const auto& d : scenes[s].dets) {
        if (d.class_id == cls) dets.push_back({s, &d});
      }
    }
    if (n_gt == 0) continue;

    std::vector<double> precision, recall;
    std::size_t tp = 0, fp = 0;
    for (std::size_t k : by_confidence(dets.size(), [&](std::size_t i) { return dets[i].det->confidence; })) {
      const auto& scene = scenes[dets[k].scene];
      const DetectionBox& d = *dets[k].det;
      const BoxSpec dbox{d.class_id, d.center, d.width, d.height};
      std::size_t best = scene.gts.size();
      double best_iou = iou_threshold;
      for (std::size_t g = 0; g < scene.gts.size(); ++g) {
        if (scene.gts[g].class_id != cls || taken[dets[k].scene][g]) continue;
        const double v = iou(dbox, scene.gts[g]);
        if (v >= best_iou && (best == scene.gts.size() || v > best_iou)) {
          best_iou = v;
          best = g;
        }
      }
      if (best < scene.gts.size()) {
        taken[dets[k].scene][best] = true;
        ++tp;
      } else {
        ++fp;
      }
      precision.push_back(static_cast<double>(tp) / (tp + fp));
      recall.push_back(static_cast<double>(tp) / n_gt);
    }

    // All-point interpolation: precision envelope integrated over recall.
    for (std::size_t i = precision.size(); i-- > 1;) {
      precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double ap = 0.0, prev_recall = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] > prev_recall) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
      }
    }
    out.ap[static_cast<int>(cls)] = ap;
  }
  out.map = 0.5 * (out.ap[0] + out.ap[1]);
  return out;
}

DetectionEval map_detection(const std::vector<BoxSpec>& gts, const std::vector<DetectionBox>& dets,
                            double iou_threshold) {
  const DetectionScene scene{gts, dets};
  return map_detection(std::span<const DetectionScene>(&scene, 1), iou_threshold);
}

std::vector<ImageKeypoints> keypoint_view(std::span<const DetectionScene> scenes, BoxClass cls) {
  std::vector<ImageKeypoints> out;
  for (const auto& s : scenes) {
    ImageKeypoints img;
    for (const auto& g : s.gts) {
      if (g.class_id == cls) img.gts.push_back(g.center);
    }
    for (const auto& d : s.dets) {
      if (d.class_id == cls) img.dets.push_back({d.center, d.confidence});
    }
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace palmroi
