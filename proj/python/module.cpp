// Python bindings for the palmroi core: geometry, ROI extraction, stub
// matching, dataset partitions and the evaluation metrics.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <vector>

#include "palmroi/annotation_io.hpp"
#include "palmroi/dataset.hpp"
#include "palmroi/errors.hpp"
#include "palmroi/eval.hpp"
#include "palmroi/geometry.hpp"
#include "palmroi/matching.hpp"
#include "palmroi/pipeline.hpp"

namespace py = pybind11;
using namespace palmroi;

namespace {

using Pixels = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using Doubles = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const Pixels& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw DataError("image must be an H x W x 3 uint8 array");
  Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(img.data.data(), a.data(), img.data.size());
  return img;
}

Pixels to_array(const Image& img) {
  Pixels out({img.height, img.width, Image::kChannels});
  std::memcpy(out.mutable_data(), img.data.data(), img.data.size());
  return out;
}

py::array_t<double> corners_array(const RoiQuad& q) {
  py::array_t<double> out({4, 2});
  auto r = out.mutable_unchecked<2>();
  for (int k = 0; k < 4; ++k) {
    r(k, 0) = q.corners[k].x;
    r(k, 1) = q.corners[k].y;
  }
  return out;
}

FeatureVector to_feature(const Doubles& a) {
  if (a.ndim() != 1) throw DataError("feature must be one-dimensional");
  return FeatureVector(std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_array(const FeatureVector& f) {
  return py::array_t<double>(static_cast<py::ssize_t>(f.values().size()), f.values().data());
}

std::vector<std::string> names_of(const std::vector<SampleId>& ids) {
  std::vector<std::string> out;
  for (const auto& id : ids) out.push_back(format_name(id));
  return out;
}

Manifest manifest_of(const std::vector<std::string>& names) {
  std::vector<ManifestEntry> entries;
  for (const auto& n : names) entries.push_back({parse_name(n), n, std::nullopt});
  return Manifest(std::move(entries));
}

py::dict split_dict(const SplitSpec& s) {
  py::dict d;
  d["train"] = names_of(s.train);
  d["val"] = names_of(s.val);
  d["test"] = names_of(s.test);
  d["seed"] = s.seed;
  return d;
}

ScoreSet score_set(std::vector<double> genuine, std::vector<double> impostor) {
  return {std::move(genuine), std::move(impostor)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Palmprint ROI extraction and evaluation";

  auto error = py::register_exception<Error>(m, "PalmroiError");
  auto data_error = py::register_exception<DataError>(m, "DataError", error.ptr());
  py::register_exception<PipelineError>(m, "PipelineError", error.ptr());
  py::register_exception<NotNormalized>(m, "NotNormalized", error.ptr());
  (void)data_error;

  m.attr("ROI_SIDE_FACTOR") = kRoiSideFactor;
  m.attr("ROI_CENTER_FACTOR") = kRoiCenterFactor;
  m.attr("DEFAULT_THRESHOLD") = kDefaultThreshold;
  m.attr("FEATURE_DIM") = kFeatureDim;

  py::class_<PalmAnnotation>(m, "PalmAnnotation")
      .def(py::init([](std::array<double, 2> p2, std::array<double, 2> p3, std::array<double, 2> p4,
                       std::optional<std::array<double, 2>> p1, double width, double height,
                       const std::string& hand, std::optional<std::string> palm_side) {
             PalmAnnotation a;
             a.gaps = {Point2D{p2[0], p2[1]}, Point2D{p3[0], p3[1]}, Point2D{p4[0], p4[1]}};
             if (p1) a.thumb_gap = Point2D{(*p1)[0], (*p1)[1]};
             a.image_width = width;
             a.image_height = height;
             if (hand != "l" && hand != "r") throw DataError("hand must be 'l' or 'r'");
             a.hand = hand == "l" ? Hand::left : Hand::right;
             if (palm_side) {
               if (*palm_side != "pos_normal" && *palm_side != "neg_normal") {
                 throw DataError("palm_side must be 'pos_normal' or 'neg_normal'");
               }
               a.palm_side = *palm_side == "pos_normal" ? PalmSide::pos_normal : PalmSide::neg_normal;
             }
             return a;
           }),
           py::arg("p2"), py::arg("p3"), py::arg("p4"), py::arg("p1") = py::none(), py::arg("width") = 640.0,
           py::arg("height") = 480.0, py::arg("hand") = "r", py::arg("palm_side") = py::none())
      .def_static("from_json", [](const std::string& text) { return parse_annotation(text); })
      .def("to_json", [](const PalmAnnotation& a) { return serialize_annotation(a); })
      .def_property_readonly("gaps",
                             [](const PalmAnnotation& a) {
                               std::vector<std::pair<double, double>> out;
                               for (auto p : a.gaps) out.emplace_back(p.x, p.y);
                               return out;
                             })
      .def_property_readonly("thumb_gap", [](const PalmAnnotation& a) -> std::optional<std::pair<double, double>> {
        if (!a.thumb_gap) return std::nullopt;
        return std::pair{a.thumb_gap->x, a.thumb_gap->y};
      });

  m.def(
      "keypoints",
      [](const PalmAnnotation& ann) {
        const KeypointTriple t = derive_triple(ann);
        return py::make_tuple(py::make_tuple(t.a.x, t.a.y), py::make_tuple(t.b.x, t.b.y),
                              py::make_tuple(t.c.x, t.c.y));
      },
      "A, B, C keypoints of an annotation");
  m.def(
      "roi_quad",
      [](const PalmAnnotation& ann) {
        const RoiQuad q = roi_quad(frame_from_triple(derive_triple(ann)));
        return py::make_tuple(corners_array(q), q.side);
      },
      "ROI corners (TL, TR, BR, BL) as a 4 x 2 array, and the side length");
  m.def(
      "boxes",
      [](const PalmAnnotation& ann, double alpha, double beta) {
        py::list out;
        for (const auto& b : boxes_from_annotation(ann, BoxSizing(alpha, beta))) {
          out.append(py::dict(py::arg("class_id") = static_cast<int>(b.class_id), py::arg("center") = py::make_tuple(b.center.x, b.center.y),
                              py::arg("width") = b.width, py::arg("height") = b.height));
        }
        return out;
      },
      py::arg("annotation"), py::arg("alpha") = 1.5, py::arg("beta") = 2.0);
  m.def(
      "rotate_annotation",
      [](const PalmAnnotation& ann, double theta, double size, bool expand) {
        return rotate_annotation(ann, theta, size, expand ? CanvasPolicy::expand : CanvasPolicy::skip);
      },
      py::arg("annotation"), py::arg("theta_deg"), py::arg("size") = 416.0, py::arg("expand") = false);
  m.def("rotation_angles", &rotation_angles, py::arg("versions"));

  m.def(
      "select_keypoints",
      [](const std::vector<std::tuple<int, double, double, double>>& dets, double conf_min) {
        std::vector<DetectionBox> boxes;
        for (const auto& [cls, conf, x, y] : dets) {
          if (cls != 0 && cls != 1) throw DataError("class must be 0 or 1");
          boxes.push_back({static_cast<BoxClass>(cls), conf, {x, y}, 0.0, 0.0});
        }
        const KeypointTriple t = select_keypoints(boxes, conf_min);
        return py::make_tuple(py::make_tuple(t.a.x, t.a.y), py::make_tuple(t.b.x, t.b.y),
                              py::make_tuple(t.c.x, t.c.y));
      },
      py::arg("detections"), py::arg("conf_min") = kDefaultConfMin,
      "Detections are (class, confidence, x, y) tuples; returns (A, B, C)");
  m.def(
      "extract_roi",
      [](const Pixels& image, const PalmAnnotation& ann, int size, double jitter, std::uint64_t seed) {
        const Image img = to_image(image);
        RoiImage roi;
        {
          py::gil_scoped_release release;
          roi = run_pipeline(img, OracleDetector(ann, {}, jitter, seed), kDefaultConfMin, size);
        }
        return py::make_tuple(to_array(roi.pixels), corners_array(roi.quad));
      },
      py::arg("image"), py::arg("annotation"), py::arg("size") = kDefaultRoiSize, py::arg("jitter") = 0.0,
      py::arg("seed") = 0, "ROI raster and its corners, using the annotation as the detector");

  py::class_<StubEmbedder>(m, "StubEmbedder")
      .def(py::init<std::uint64_t>(), py::arg("seed") = 0)
      .def(
          "embed",
          [](const StubEmbedder& e, const Pixels& roi) { return to_array(normalize(embed(to_image(roi), e))); },
          py::arg("roi"), "Normalised 512-d feature of a square ROI raster");

  m.def("score", [](const Doubles& a, const Doubles& b) {
    return score(FeatureVector(std::vector<double>(a.data(), a.data() + a.size()), true),
                 FeatureVector(std::vector<double>(b.data(), b.data() + b.size()), true));
  });
  m.def("normalize", [](const Doubles& a) { return to_array(normalize(to_feature(a))); });
  m.def(
      "verify_pair",
      [](const Pixels& roi1, const Pixels& roi2, const StubEmbedder& e, double threshold) {
        const MatchDecision d = verify_pair({to_image(roi1), {}, {}}, {to_image(roi2), {}, {}}, e, threshold);
        return py::dict(py::arg("score") = d.score, py::arg("threshold") = d.threshold,
                        py::arg("outcome") = std::string(to_string(d.outcome)));
      },
      py::arg("roi1"), py::arg("roi2"), py::arg("embedder"), py::arg("threshold") = kDefaultThreshold);

  m.def("parse_name", [](const std::string& name) {
    const SampleId id = parse_name(name);
    return py::dict(py::arg("subject") = id.subject, py::arg("session") = id.session,
                    py::arg("device") = std::string(to_string(id.device)),
                    py::arg("hand") = id.hand == Hand::left ? "l" : "r", py::arg("index") = id.index);
  });
  m.def(
      "format_name",
      [](int subject, int session, const std::string& device, const std::string& hand, int index) {
        if (device != "huawei" && device != "xiaomi") throw DataError("device must be 'huawei' or 'xiaomi'");
        if (hand != "l" && hand != "r") throw DataError("hand must be 'l' or 'r'");
        return format_name({subject, session, device == "huawei" ? Device::huawei : Device::xiaomi,
                            hand == "l" ? Hand::left : Hand::right, index});
      },
      py::arg("subject"), py::arg("session"), py::arg("device"), py::arg("hand"), py::arg("index"));
  m.def(
      "detector_split",
      [](const std::vector<std::string>& names, std::uint64_t seed, const std::string& ratio, bool by_subject) {
        return split_dict(detector_split(manifest_of(names), seed, parse_ratio(ratio),
                                         by_subject ? SplitMode::by_subject : SplitMode::by_sample));
      },
      py::arg("names"), py::arg("seed") = kDefaultSeed, py::arg("ratio") = "8:1:1", py::arg("by_subject") = false);
  m.def(
      "verifier_split",
      [](const std::vector<std::string>& names, double train_fraction, std::optional<std::uint64_t> seed) {
        return split_dict(verifier_split(manifest_of(names), train_fraction, seed));
      },
      py::arg("names"), py::arg("train_fraction") = 0.8, py::arg("seed") = py::none());
  m.def(
      "kfold",
      [](const std::vector<std::string>& names, int k, std::uint64_t seed) {
        py::list out;
        for (const auto& s : kfold(manifest_of(names), k, seed)) out.append(split_dict(s));
        return out;
      },
      py::arg("names"), py::arg("k") = 5, py::arg("seed") = kDefaultSeed);

  m.def("eer", [](std::vector<double> g, std::vector<double> i) { return eer(score_set(std::move(g), std::move(i))); },
        py::arg("genuine"), py::arg("impostor"));
  m.def(
      "tpr_at_far",
      [](std::vector<double> g, std::vector<double> i, std::vector<double> targets) {
        py::list out;
        for (const auto& c : tpr_at_far(score_set(std::move(g), std::move(i)), targets)) {
          out.append(py::dict(py::arg("far_target") = c.far_target, py::arg("threshold") = c.threshold,
                              py::arg("achieved_far") = c.achieved_far, py::arg("tpr") = c.tpr,
                              py::arg("unreachable") = c.unreachable));
        }
        return out;
      },
      py::arg("genuine"), py::arg("impostor"),
      py::arg("far_targets") = std::vector<double>(kFarTargets.begin(), kFarTargets.end()));
  m.def(
      "keypoint_match",
      [](const std::vector<std::pair<double, double>>& gts,
         const std::vector<std::tuple<double, double, double>>& dets, double delta) {
        std::vector<Point2D> g;
        for (auto [x, y] : gts) g.push_back({x, y});
        std::vector<ScoredPoint> d;
        for (auto [x, y, c] : dets) d.push_back({{x, y}, c});
        const KeypointMatch r = keypoint_match(g, d, delta);
        return py::dict(py::arg("true_positives") = r.true_positives,
                        py::arg("false_positives") = r.false_positives, py::arg("misses") = r.misses);
      },
      py::arg("gts"), py::arg("dets"), py::arg("delta") = kDefaultDelta,
      "Ground-truth (x, y) points against (x, y, confidence) detections");
  m.def(
      "lamr",
      [](const std::vector<std::pair<double, double>>& points) {
        DetCurve c;
        for (auto [fppi, mr] : points) c.points.push_back({fppi, mr, 0.0});
        std::sort(c.points.begin(), c.points.end(), [](const DetPoint& a, const DetPoint& b) {
          return a.fppi < b.fppi || (a.fppi == b.fppi && a.miss_rate > b.miss_rate);
        });
        return lamr(c);
      },
      py::arg("points"), "Log-average miss rate of (fppi, miss_rate) points");
}
