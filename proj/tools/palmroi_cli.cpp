// palmroi: batch entry points for ROI extraction, dataset preparation,
// evaluation and the HTTP service.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 pipeline error.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "palmroi/annotation_io.hpp"
#include "palmroi/dataset.hpp"
#include "palmroi/eval.hpp"
#include "palmroi/image_io.hpp"
#include "palmroi/matching.hpp"
#include "palmroi/pipeline.hpp"
#include "palmroi/report.hpp"
#include "palmroi/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace palmroi;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPipeline = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

json point_json(Point2D p) { return {{"x", p.x}, {"y", p.y}}; }

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + item + "'");
    }
  }
  return out;
}

void require_backend(const std::string& backend) {
  if (backend != "oracle") {
    throw UsageError("unsupported detector backend '" + backend + "' (this build provides: oracle)");
  }
}

void require_embedder(const std::string& embedder) {
  if (embedder != "stub") {
    throw UsageError("unsupported embedder '" + embedder + "' (this build provides: stub)");
  }
}

// ---------------------------------------------------------------- roi-extract

struct RoiOptions {
  fs::path image;
  fs::path annotation;
  fs::path out;
  std::string backend = "oracle";
  int size = kDefaultRoiSize;
  double conf_min = kDefaultConfMin;
  double jitter = 0.0;
  double alpha = 1.5;
  double beta = 2.0;
  std::uint64_t seed = kDefaultSeed;
};

int run_roi_extract(const RoiOptions& o) {
  require_backend(o.backend);
  fs::path ann_path = o.annotation;
  if (ann_path.empty()) {
    ann_path = sidecar_path(o.image);
    if (!fs::exists(ann_path)) {
      throw UsageError("the oracle backend needs --annotation (no " + ann_path.string() + " next to the image)");
    }
  }
  if (o.size <= 0) throw UsageError("--size must be positive");
  const Image image = read_image(o.image);
  const PalmAnnotation ann = load_annotation(ann_path, ImageSize(image.width, image.height));
  const OracleDetector detector(ann, BoxSizing(o.alpha, o.beta), o.jitter, o.seed);
  const RoiImage roi = run_pipeline(image, detector, o.conf_min, o.size, o.image.filename().string());
  write_image(roi.pixels, o.out);

  json corners = json::array();
  for (Point2D c : roi.quad.corners) corners.push_back(point_json(c));
  json prov = {{"source", roi.source_id},
               {"output", o.out.string()},
               {"size", o.size},
               {"roi_side", roi.quad.side},
               {"corners", corners}};
  std::cout << prov.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------- dataset

int run_scan(const fs::path& root, const fs::path& out) {
  const Manifest m = scan_directory(root);
  write_text(out, serialize_manifest(m));
  std::cout << "scanned " << m.size() << " samples, " << m.identities().size() << " palms, "
            << m.subjects().size() << " subjects -> " << out.string() << '\n';
  return 0;
}

void print_split(const SplitSpec& s) {
  std::cout << "train " << s.train.size() << " (" << subjects_of(s.train).size() << " subjects), val "
            << s.val.size() << " (" << subjects_of(s.val).size() << " subjects), test " << s.test.size()
            << " (" << subjects_of(s.test).size() << " subjects)\n";
}

struct AugmentOptions {
  fs::path manifest;
  fs::path root;
  fs::path image;
  fs::path annotation;
  fs::path out_dir;
  int versions = 24;
  int canvas = kDefaultCanvas;
  bool expand = false;
  double alpha = 1.5;
  double beta = 2.0;
};

std::string yolo_labels(const std::vector<BoxSpec>& boxes, double canvas) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  for (const auto& b : boxes) {
    os << static_cast<int>(b.class_id) << ' ' << b.center.x / canvas << ' ' << b.center.y / canvas << ' '
       << b.width / canvas << ' ' << b.height / canvas << '\n';
  }
  return os.str();
}

int run_augment(const AugmentOptions& o) {
  std::vector<std::pair<fs::path, fs::path>> sources;
  if (!o.manifest.empty()) {
    const Manifest m = load_manifest(o.manifest);
    const fs::path root = o.root.empty() ? o.manifest.parent_path() : o.root;
    for (const auto& e : m.entries()) {
      if (!e.annotation) continue;
      sources.emplace_back(root / e.image, root / *e.annotation);
    }
  } else if (!o.image.empty()) {
    sources.emplace_back(o.image, o.annotation.empty() ? sidecar_path(o.image) : o.annotation);
  } else {
    throw UsageError("augment needs --manifest or --image");
  }
  fs::create_directories(o.out_dir);
  const BoxSizing sizing(o.alpha, o.beta);
  const CanvasPolicy policy = o.expand ? CanvasPolicy::expand : CanvasPolicy::skip;

  std::ostringstream index;
  index << "# file\tsource\tversion\tangle\n";
  std::size_t written = 0, skipped = 0;
  for (const auto& [img_path, ann_path] : sources) {
    const Image image = read_image(img_path);
    const PalmAnnotation ann = load_annotation(ann_path, ImageSize(image.width, image.height));
    const AugmentResult r = augment_rotations(image, ann, o.versions, o.canvas, sizing, policy);
    const std::string stem = img_path.stem().string();
    for (const auto& s : r.samples) {
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "_j%02d", s.version);
      const std::string base = stem + suffix;
      write_image(s.image, o.out_dir / (base + ".png"));
      save_annotation(s.annotation, o.out_dir / (base + ".ann.json"));
      write_text(o.out_dir / (base + ".txt"), yolo_labels(s.boxes, s.annotation.image_width));
      index << base << ".png\t" << img_path.filename().string() << '\t' << s.version << '\t' << s.angle << '\n';
      ++written;
    }
    for (const auto& s : r.skipped) {
      std::cerr << "skipped " << stem << " version " << s.version << ": " << s.reason << '\n';
      ++skipped;
    }
  }
  write_text(o.out_dir / "augment_index.tsv", index.str());
  std::cout << "wrote " << written << " rotated samples from " << sources.size() << " sources (step "
            << 360.0 / o.versions << " deg), skipped " << skipped << '\n';
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalInput {
  fs::path manifest;
  fs::path root;
  fs::path split;
  std::string part = "test";
  std::string embedder = "stub";
  std::uint64_t embed_seed = 0;
  int roi_size = kDefaultRoiSize;
  double conf_min = kDefaultConfMin;
  double jitter = 0.0;
  double alpha = 1.5;
  double beta = 2.0;
  std::uint64_t seed = kDefaultSeed;
};

Manifest select_subset(const EvalInput& in) {
  const Manifest m = load_manifest(in.manifest);
  if (in.split.empty()) return m;
  std::ifstream f(in.split);
  if (!f) throw DataError("cannot read split " + in.split.string());
  std::stringstream ss;
  ss << f.rdbuf();
  const SplitSpec s = parse_split(ss.str());
  if (in.part == "train") return m.subset(s.train);
  if (in.part == "val") return m.subset(s.val);
  if (in.part == "test") return m.subset(s.test);
  throw UsageError("--part must be train, val or test");
}

fs::path root_of(const EvalInput& in) { return in.root.empty() ? in.manifest.parent_path() : in.root; }

// Annotated entries go through the ROI pipeline; others are taken as ROIs.
FeatureMap compute_features(const EvalInput& in, const Manifest& subset) {
  require_embedder(in.embedder);
  const StubEmbedder embedder(in.embed_seed);
  const fs::path root = root_of(in);
  FeatureMap features;
  for (const auto& e : subset.entries()) {
    const Image image = read_image(root / e.image);
    Image roi;
    if (e.annotation) {
      const PalmAnnotation ann = load_annotation(root / *e.annotation, ImageSize(image.width, image.height));
      const OracleDetector det(ann, BoxSizing(in.alpha, in.beta), in.jitter, in.seed);
      roi = run_pipeline(image, det, in.conf_min, in.roi_size).pixels;
    } else {
      roi = image.width == image.height ? image : resize_bilinear(image, kEmbedInputSize, kEmbedInputSize);
    }
    features.emplace(e.id, normalize(embed(roi, embedder)));
  }
  return features;
}

ImpostorSampling parse_impostors(const std::string& text, std::uint64_t seed) {
  if (text == "auto") return {ImpostorSampling::Mode::automatic, 0, seed};
  if (text == "full") return ImpostorSampling::full();
  try {
    return ImpostorSampling::sampled(std::stoull(text), seed);
  } catch (const std::exception&) {
    throw UsageError("--impostors must be auto, full or a pair count");
  }
}

void emit(const Report& r, const std::vector<std::string>& pct, const std::string& json_out) {
  std::cout << r.to_table(pct);
  if (!json_out.empty()) write_text(json_out, r.to_json());
}

std::string far_key(double far) {
  std::ostringstream os;
  os << "tpr@far=" << far;
  return os.str();
}

int run_eval_verify(const EvalInput& in, const std::string& fars, const std::string& impostors,
                    const std::string& json_out, const std::string& csv_out) {
  const Manifest subset = select_subset(in);
  const ScoreSet scores = gen_pairs(subset, compute_features(in, subset), parse_impostors(impostors, in.seed));
  const auto targets = parse_list(fars);
  const auto calib = tpr_at_far(scores, targets);

  Report r;
  r.title = "verification: " + std::to_string(scores.genuine.size()) + " genuine / " +
            std::to_string(scores.impostor.size()) + " impostor pairs";
  std::vector<std::string> pct{"eer"};
  r.metrics["eer"] = eer(scores);
  for (const auto& c : calib) {
    r.metrics[far_key(c.far_target)] = c.tpr;
    r.metrics["threshold@far=" + far_key(c.far_target).substr(8)] = c.threshold;
    pct.push_back(far_key(c.far_target));
  }
  r.curves["roc"] = roc_points(calib);
  emit(r, pct, json_out);
  if (!csv_out.empty()) write_text(csv_out, curve_csv(r.curves["roc"]));
  return 0;
}

int run_eval_identify(const EvalInput& in, int repeats, const std::string& json_out) {
  const Manifest subset = select_subset(in);
  Report r;
  r.title = "identification over " + std::to_string(subset.identities().size()) + " palms";
  r.metrics["top1"] = top1(subset, compute_features(in, subset), in.seed, repeats);
  emit(r, {"top1"}, json_out);
  return 0;
}

int run_eval_threshold(const EvalInput& in, double far, const std::string& impostors) {
  const Manifest subset = select_subset(in);
  const ScoreSet scores = gen_pairs(subset, compute_features(in, subset), parse_impostors(impostors, in.seed));
  const std::vector<double> target{far};
  const CalibrationResult c = tpr_at_far(scores, target).front();
  std::cout.precision(10);
  std::cout << "T=" << c.threshold << " far_target=" << c.far_target << " achieved_far=" << c.achieved_far
            << " tpr=" << c.tpr << (c.unreachable ? " (target unreachable on this score set)" : "") << '\n';
  return 0;
}

std::vector<DetectionBox> parse_detections(const json& arr) {
  std::vector<DetectionBox> out;
  for (const auto& d : arr) {
    DetectionBox b;
    const int cls = d.at("class").get<int>();
    if (cls != 0 && cls != 1) throw DataError("detection class must be 0 or 1");
    b.class_id = static_cast<BoxClass>(cls);
    b.confidence = d.at("confidence").get<double>();
    b.center = {d.at("center").at("x").get<double>(), d.at("center").at("y").get<double>()};
    b.width = d.at("width").get<double>();
    b.height = d.at("height").get<double>();
    out.push_back(b);
  }
  return out;
}

int run_eval_detect(const EvalInput& in, const fs::path& detections, const std::string& backend, double delta,
                    double iou_thr, const std::string& json_out, const std::string& csv_prefix) {
  const Manifest subset = select_subset(in);
  const fs::path root = root_of(in);
  json dets_doc;
  if (!detections.empty()) {
    std::ifstream f(detections);
    if (!f) throw DataError("cannot read detections " + detections.string());
    try {
      dets_doc = json::parse(f);
    } catch (const json::exception& e) {
      throw DataError(detections.string() + ": " + e.what());
    }
  } else {
    require_backend(backend);
  }

  const BoxSizing sizing(in.alpha, in.beta);
  std::vector<DetectionScene> scenes;
  for (const auto& e : subset.entries()) {
    if (!e.annotation) continue;
    const Image image = read_image(root / e.image);
    const PalmAnnotation ann = load_annotation(root / *e.annotation, ImageSize(image.width, image.height));
    DetectionScene scene;
    scene.gts = boxes_from_annotation(ann, sizing);
    if (!detections.empty()) {
      const std::string name = format_name(e.id);
      if (dets_doc.contains(name)) {
        try {
          scene.dets = parse_detections(dets_doc[name]);
        } catch (const json::exception& ex) {
          throw DataError(detections.string() + " [" + name + "]: " + ex.what());
        }
      }
    } else {
      scene.dets = OracleDetector(ann, sizing, in.jitter, in.seed + scenes.size()).detect(image);
    }
    scenes.push_back(std::move(scene));
  }
  if (scenes.empty()) throw DataError("no annotated samples to evaluate");

  const DetectionEval ev = map_detection(scenes, iou_thr);
  Report r;
  r.title = "detection over " + std::to_string(scenes.size()) + " images";
  r.metrics["ap_class0"] = ev.ap[0];
  r.metrics["ap_class1"] = ev.ap[1];
  r.metrics["map"] = ev.map;
  for (BoxClass cls : {BoxClass::double_finger_gap, BoxClass::palm_center}) {
    const auto view = keypoint_view(scenes, cls);
    const DetCurve curve = miss_rate_fppi(view, {}, delta);
    const std::string key = std::string(to_string(cls));
    r.metrics["lamr_" + key] = lamr(curve);
    r.curves["det_" + key] = det_curve(curve);
    if (!csv_prefix.empty()) write_text(csv_prefix + "det_" + key + ".csv", curve_csv(r.curves["det_" + key]));
  }
  emit(r, {"ap_class0", "ap_class1", "map", "lamr_double_finger_gap", "lamr_palm_center"}, json_out);
  return 0;
}

// ---------------------------------------------------------------- serve

PalmService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int run_serve(const std::string& addr, int port, double threshold, const std::string& backend,
              const std::string& embedder, std::uint64_t embed_seed, const fs::path& store,
              const fs::path& static_dir) {
  require_backend(backend);
  require_embedder(embedder);
  ServiceConfig cfg;
  cfg.threshold = threshold;
  cfg.store_path = store;
  if (!static_dir.empty()) cfg.static_dir = static_dir;
  PalmService service(cfg, std::make_unique<StubEmbedder>(embed_seed), oracle_detector_factory());
  const int bound = service.bind(addr, port);
  std::cout << "palmroi service on http://" << addr << ':' << bound << " threshold T=" << threshold
            << " store=" << store.string() << std::endl;
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.listen();
  g_service = nullptr;
  return 0;
}

void add_eval_inputs(CLI::App* cmd, EvalInput& in) {
  cmd->add_option("--manifest", in.manifest, "Manifest file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--root", in.root, "Dataset root (default: manifest directory)");
  cmd->add_option("--split", in.split, "Split file restricting the samples");
  cmd->add_option("--part", in.part, "Split partition to evaluate")->capture_default_str();
  cmd->add_option("--embedder", in.embedder, "Embedder backend")->capture_default_str();
  cmd->add_option("--embed-seed", in.embed_seed, "Stub embedder projection seed")->capture_default_str();
  cmd->add_option("--roi-size", in.roi_size, "ROI raster size")->capture_default_str();
  cmd->add_option("--conf-min", in.conf_min, "Detection confidence floor")->capture_default_str();
  cmd->add_option("--jitter", in.jitter, "Oracle detector centre jitter (px)")->capture_default_str();
  cmd->add_option("--alpha", in.alpha, "Finger-gap box side factor")->capture_default_str();
  cmd->add_option("--beta", in.beta, "Palm-centre box side factor")->capture_default_str();
  cmd->add_option("--seed", in.seed, "Seed for randomized steps")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"palmroi: palmprint ROI extraction, matching and evaluation"};
  app.require_subcommand(1);
  int rc = 0;

  // roi-extract
  RoiOptions roi;
  auto* roi_cmd = app.add_subcommand("roi-extract", "Extract the palmprint ROI of one image");
  roi_cmd->add_option("--image", roi.image, "Palm image")->required()->check(CLI::ExistingFile);
  roi_cmd->add_option("--annotation", roi.annotation, "Annotation sidecar (default: <stem>.ann.json)");
  roi_cmd->add_option("--backend", roi.backend, "Detector backend")->capture_default_str();
  roi_cmd->add_option("--out", roi.out, "Output ROI image")->required();
  roi_cmd->add_option("--size", roi.size, "ROI raster size")->capture_default_str();
  roi_cmd->add_option("--conf-min", roi.conf_min, "Detection confidence floor")->capture_default_str();
  roi_cmd->add_option("--jitter", roi.jitter, "Oracle detector centre jitter (px)")->capture_default_str();
  roi_cmd->add_option("--alpha", roi.alpha, "Finger-gap box side factor")->capture_default_str();
  roi_cmd->add_option("--beta", roi.beta, "Palm-centre box side factor")->capture_default_str();
  roi_cmd->add_option("--seed", roi.seed, "Jitter seed")->capture_default_str();
  roi_cmd->callback([&] { rc = run_roi_extract(roi); });

  // dataset
  auto* ds = app.add_subcommand("dataset", "Dataset manifests, splits and augmentation");
  ds->require_subcommand(1);

  fs::path scan_root, scan_out;
  auto* scan = ds->add_subcommand("scan", "Build a manifest from a directory of named images");
  scan->add_option("--root", scan_root, "Dataset root")->required()->check(CLI::ExistingDirectory);
  scan->add_option("--out", scan_out, "Manifest output")->required();
  scan->callback([&] { rc = run_scan(scan_root, scan_out); });

  fs::path split_manifest, split_out;
  std::string split_ratio = "8:1:1";
  std::uint64_t split_seed = kDefaultSeed;
  bool split_by_subject = false;
  auto* split = ds->add_subcommand("split", "Seeded train/val/test split for the detector set");
  split->add_option("--manifest", split_manifest, "Manifest file")->required()->check(CLI::ExistingFile);
  split->add_option("--out", split_out, "Split output")->required();
  split->add_option("--ratio", split_ratio, "train:val:test")->capture_default_str();
  split->add_option("--seed", split_seed, "Shuffle seed")->capture_default_str();
  split->add_flag("--by-subject", split_by_subject, "Keep each subject in one partition");
  split->callback([&] {
    SplitRatio ratio;
    try {
      ratio = parse_ratio(split_ratio);
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
    const SplitSpec s = detector_split(load_manifest(split_manifest), split_seed, ratio,
                                       split_by_subject ? SplitMode::by_subject : SplitMode::by_sample);
    write_text(split_out, serialize_split(s));
    print_split(s);
  });

  fs::path vs_manifest, vs_out;
  double vs_fraction = 0.8;
  std::optional<std::uint64_t> vs_seed;
  auto* vsplit = ds->add_subcommand("verifier-split", "Subject-disjoint train/test split for the verifier");
  vsplit->add_option("--manifest", vs_manifest, "Manifest file")->required()->check(CLI::ExistingFile);
  vsplit->add_option("--out", vs_out, "Split output")->required();
  vsplit->add_option("--train-fraction", vs_fraction, "Fraction of subjects used for training")->capture_default_str();
  vsplit->add_option("--seed", vs_seed, "Shuffle subjects (default: lowest numbers train)");
  vsplit->callback([&] {
    const SplitSpec s = verifier_split(load_manifest(vs_manifest), vs_fraction, vs_seed);
    write_text(vs_out, serialize_split(s));
    print_split(s);
  });

  fs::path kf_manifest, kf_out;
  int kf_k = 5;
  std::uint64_t kf_seed = kDefaultSeed;
  auto* kf = ds->add_subcommand("kfold", "Subject-disjoint k-fold partition");
  kf->add_option("--manifest", kf_manifest, "Manifest file")->required()->check(CLI::ExistingFile);
  kf->add_option("--out-dir", kf_out, "Directory for fold_<i>.txt")->required();
  kf->add_option("--k", kf_k, "Number of folds")->capture_default_str();
  kf->add_option("--seed", kf_seed, "Shuffle seed")->capture_default_str();
  kf->callback([&] {
    const auto folds = kfold(load_manifest(kf_manifest), kf_k, kf_seed);
    for (std::size_t i = 0; i < folds.size(); ++i) {
      write_text(kf_out / ("fold_" + std::to_string(i) + ".txt"), serialize_split(folds[i]));
      std::cout << "fold " << i << ": ";
      print_split(folds[i]);
    }
  });

  AugmentOptions aug;
  auto* augment = ds->add_subcommand("augment", "Rotation-augmented detector samples");
  augment->add_option("--manifest", aug.manifest, "Manifest of annotated images");
  augment->add_option("--root", aug.root, "Dataset root (default: manifest directory)");
  augment->add_option("--image", aug.image, "Single image instead of a manifest");
  augment->add_option("--annotation", aug.annotation, "Annotation of --image");
  augment->add_option("--out-dir", aug.out_dir, "Output directory")->required();
  augment->add_option("--J", aug.versions, "Rotated versions per image")->capture_default_str();
  augment->add_option("--size", aug.canvas, "Square canvas size s_f")->capture_default_str();
  augment->add_flag("--expand", aug.expand, "Grow the canvas instead of skipping off-canvas rotations");
  augment->add_option("--alpha", aug.alpha, "Finger-gap box side factor")->capture_default_str();
  augment->add_option("--beta", aug.beta, "Palm-centre box side factor")->capture_default_str();
  augment->callback([&] { rc = run_augment(aug); });

  // eval
  auto* ev = app.add_subcommand("eval", "Verification and detection evaluation");
  ev->require_subcommand(1);

  EvalInput v_in;
  std::string v_fars = "1e-1,1e-2,1e-3,1e-4", v_imp = "auto", v_json, v_csv;
  auto* verify = ev->add_subcommand("verify", "EER and TPR@FAR over genuine/impostor pairs");
  add_eval_inputs(verify, v_in);
  verify->add_option("--far", v_fars, "Comma-separated FAR targets")->capture_default_str();
  verify->add_option("--impostors", v_imp, "auto, full or a sampled pair count")->capture_default_str();
  verify->add_option("--json", v_json, "Write the report as JSON");
  verify->add_option("--csv", v_csv, "Write ROC points as CSV");
  verify->callback([&] { rc = run_eval_verify(v_in, v_fars, v_imp, v_json, v_csv); });

  EvalInput i_in;
  int i_repeats = 10;
  std::string i_json;
  auto* identify = ev->add_subcommand("identify", "Top-1 identification accuracy");
  add_eval_inputs(identify, i_in);
  identify->add_option("--repeats", i_repeats, "Random gallery draws")->capture_default_str();
  identify->add_option("--json", i_json, "Write the report as JSON");
  identify->callback([&] { rc = run_eval_identify(i_in, i_repeats, i_json); });

  EvalInput t_in;
  double t_far = 1e-4;
  std::string t_imp = "auto";
  auto* threshold = ev->add_subcommand("threshold", "Calibrate the decision threshold at a FAR target");
  add_eval_inputs(threshold, t_in);
  threshold->add_option("--far", t_far, "FAR target")->capture_default_str();
  threshold->add_option("--impostors", t_imp, "auto, full or a sampled pair count")->capture_default_str();
  threshold->callback([&] { rc = run_eval_threshold(t_in, t_far, t_imp); });

  EvalInput d_in;
  fs::path d_dets;
  std::string d_backend = "oracle", d_json, d_csv;
  double d_delta = kDefaultDelta, d_iou = 0.5;
  auto* detect = ev->add_subcommand("detect", "Box mAP and keypoint LAMR");
  add_eval_inputs(detect, d_in);
  detect->add_option("--detections", d_dets, "Detections JSON keyed by sample name");
  detect->add_option("--backend", d_backend, "Detector backend when no detections file is given")
      ->capture_default_str();
  detect->add_option("--delta", d_delta, "Keypoint match radius (px)")->capture_default_str();
  detect->add_option("--iou", d_iou, "Box IoU threshold")->capture_default_str();
  detect->add_option("--json", d_json, "Write the report as JSON");
  detect->add_option("--csv-prefix", d_csv, "Write miss-rate/FPPI curves as <prefix>det_<class>.csv");
  detect->callback([&] { rc = run_eval_detect(d_in, d_dets, d_backend, d_delta, d_iou, d_json, d_csv); });

  // serve
  std::string s_addr = "127.0.0.1", s_backend = "oracle", s_embedder = "stub";
  int s_port = 8080;
  double s_threshold = kDefaultThreshold;
  std::uint64_t s_embed_seed = 0;
  fs::path s_store = "palmroi_templates.json", s_static;
  auto* serve = app.add_subcommand("serve", "Run the enrollment/verification HTTP service");
  serve->add_option("--addr", s_addr, "Listen address")->capture_default_str();
  serve->add_option("--port", s_port, "Listen port (0 picks a free port)")->capture_default_str();
  serve->add_option("--threshold", s_threshold, "Decision threshold T")->capture_default_str();
  serve->add_option("--backend", s_backend, "Detector backend")->capture_default_str();
  serve->add_option("--embedder", s_embedder, "Embedder backend")->capture_default_str();
  serve->add_option("--embed-seed", s_embed_seed, "Stub embedder projection seed")->capture_default_str();
  serve->add_option("--store", s_store, "Template store file")->capture_default_str();
  serve->add_option("--static-dir", s_static, "Serve web UI assets from this directory");
  serve->callback([&] {
    rc = run_serve(s_addr, s_port, s_threshold, s_backend, s_embedder, s_embed_seed, s_store, s_static);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const PipelineError& e) {
    std::cerr << "pipeline error: " << e.what() << '\n';
    return kExitPipeline;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return rc;
}
