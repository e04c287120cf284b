#include "palmroi/service.hpp"

#include <mutex>

#include <httplib.h>
#include <json.hpp>

#include "base64.hpp"
#include "palmroi/annotation_io.hpp"
#include "palmroi/image_io.hpp"

namespace palmroi {

namespace {

using nlohmann::json;

json to_json(Point2D p) { return {{"x", p.x}, {"y", p.y}}; }

json to_json(const DetectionBox& d) {
  return {{"class", static_cast<int>(d.class_id)},
          {"label", std::string(to_string(d.class_id))},
          {"confidence", d.confidence},
          {"center", to_json(d.center)},
          {"width", d.width},
          {"height", d.height}};
}

json missing_json(const IncompleteDetection& e) {
  json out = json::array();
  for (BoxClass c : e.missing()) out.push_back(std::string(to_string(c)));
  return out;
}

/// An error response: HTTP status plus a machine-readable code.
struct HttpError {
  int status;
  std::string code;
  std::string message;
  json extra = json::object();
};

struct Payload {
  std::optional<std::string> user;
  std::optional<std::string> palm;
  std::optional<std::string> annotation;
  std::optional<std::vector<std::uint8_t>> image;
};

Payload parse_payload(const httplib::Request& req) {
  Payload p;
  if (req.is_multipart_form_data()) {
    auto text = [&](const char* key) -> std::optional<std::string> {
      if (!req.has_file(key)) return std::nullopt;
      return req.get_file_value(key).content;
    };
    p.user = text("user");
    p.palm = text("palm");
    p.annotation = text("annotation");
    if (auto img = text("image")) p.image = std::vector<std::uint8_t>(img->begin(), img->end());
    return p;
  }

  const std::string type = req.get_header_value("Content-Type");
  if (type.starts_with("image/") || type == "application/octet-stream") {
    p.image = std::vector<std::uint8_t>(req.body.begin(), req.body.end());
    if (req.has_param("user")) p.user = req.get_param_value("user");
    if (req.has_param("palm")) p.palm = req.get_param_value("palm");
    if (req.has_param("annotation")) p.annotation = req.get_param_value("annotation");
    return p;
  }

  json doc;
  try {
    doc = json::parse(req.body);
  } catch (const json::parse_error&) {
    throw HttpError{400, "bad_request", "request body is neither multipart nor JSON"};
  }
  if (!doc.is_object()) throw HttpError{400, "bad_request", "request body must be a JSON object"};
  auto str = [&](const char* key) -> std::optional<std::string> {
    if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
    if (!doc[key].is_string()) throw HttpError{400, "bad_request", std::string(key) + " must be a string"};
    return doc[key].get<std::string>();
  };
  p.user = str("user");
  p.palm = str("palm");
  if (doc.contains("annotation") && !doc["annotation"].is_null()) {
    p.annotation = doc["annotation"].is_string() ? doc["annotation"].get<std::string>() : doc["annotation"].dump();
  }
  if (auto b64 = str("image")) {
    auto bytes = detail::base64_decode(*b64);
    if (!bytes) throw HttpError{400, "bad_image", "image field is not valid base64"};
    p.image = std::move(*bytes);
  }
  return p;
}

Hand parse_palm(const std::string& s) {
  if (s == "left" || s == "l") return Hand::left;
  if (s == "right" || s == "r") return Hand::right;
  throw HttpError{400, "bad_request", "palm must be 'left' or 'right'"};
}

std::string require_user(const Payload& p) {
  if (!p.user || p.user->empty()) throw HttpError{400, "bad_request", "missing user"};
  return *p.user;
}

struct DecodedInput {
  Image image;
  std::optional<PalmAnnotation> annotation;
};

DecodedInput decode_input(const Payload& p) {
  if (!p.image) throw HttpError{400, "bad_image", "missing image"};
  DecodedInput in;
  try {
    in.image = decode_image(*p.image);
  } catch (const DataError& e) {
    throw HttpError{400, "bad_image", e.what()};
  }
  if (p.annotation) {
    try {
      in.annotation = parse_annotation(*p.annotation, ImageSize{in.image.width, in.image.height});
    } catch (const DataError& e) {
      throw HttpError{400, "bad_annotation", e.what()};
    }
  }
  return in;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const HttpError& e) {
      json body = e.extra;
      body["error"] = e.code;
      body["message"] = e.message;
      send_json(res, e.status, body);
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
    }
  };
}

}  // namespace

DetectorFactory oracle_detector_factory(BoxSizing sizing) {
  return [sizing](const std::optional<PalmAnnotation>& ann) -> std::unique_ptr<DetectorBackend> {
    if (ann) return oracle_detector(*ann, sizing);
    return std::make_unique<EmptyDetector>();
  };
}

PalmService::PalmService(ServiceConfig config, std::unique_ptr<EmbedderBackend> embedder,
                         DetectorFactory detectors)
    : config_(std::move(config)),
      embedder_(std::move(embedder)),
      detectors_(std::move(detectors)),
      store_(config_.store_path),
      server_(std::make_unique<httplib::Server>()) {
  if (!embedder_) throw std::invalid_argument("service needs an embedder backend");
  if (!detectors_) throw std::invalid_argument("service needs a detector factory");
  // The httplib default sets SO_REUSEPORT, which would let a second service
  // share a port that is already in use.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  register_routes();
}

PalmService::~PalmService() { stop(); }

int PalmService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port) + " (address in use?)");
  }
  return port;
}

void PalmService::listen() { server_->listen_after_bind(); }

void PalmService::stop() {
  if (server_) server_->stop();
}

void PalmService::register_routes() {
  auto& srv = *server_;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  // Runs detection + ROI extraction + embedding; scan failures become 422.
  auto probe_feature = [this](const DecodedInput& in) {
    try {
      const auto detector = detectors_(in.annotation);
      const RoiImage roi = run_pipeline(in.image, *detector, config_.conf_min, config_.roi_size);
      return normalize(embed(roi, *embedder_));
    } catch (const IncompleteDetection& e) {
      throw HttpError{422, "scan_failed", kScanFailMessage, {{"missing", missing_json(e)}}};
    } catch (const PipelineError& e) {
      if (dynamic_cast<const BackendFailure*>(&e)) throw;
      throw HttpError{422, "scan_failed", kScanFailMessage, {{"detail", e.what()}}};
    }
  };

  srv.Get("/health", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"status", "ok"}, {"threshold", config_.threshold}});
          }));

  srv.Post("/detect", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const DecodedInput in = decode_input(parse_payload(req));
             const auto detector = detectors_(in.annotation);
             const auto dets = detector->detect(in.image);
             json body;
             body["image"] = {{"width", in.image.width}, {"height", in.image.height}};
             body["detections"] = json::array();
             for (const auto& d : dets) body["detections"].push_back(to_json(d));
             try {
               const KeypointTriple t = select_keypoints(dets, config_.conf_min);
               const LocalFrame f = frame_from_triple(t);
               const RoiQuad q = roi_quad(f);
               body["status"] = "ok";
               body["keypoints"] = {{"a", to_json(t.a)}, {"b", to_json(t.b)}, {"c", to_json(t.c)}};
               body["frame"] = {{"origin", to_json(f.origin)},
                                {"x_axis", to_json(f.x_axis)},
                                {"y_axis", to_json(f.y_axis)},
                                {"unit", f.unit}};
               json corners = json::array();
               for (Point2D c : q.corners) corners.push_back(to_json(c));
               body["roi_quad"] = {{"corners", corners}, {"side", q.side}};
             } catch (const IncompleteDetection& e) {
               body["status"] = "incomplete";
               body["missing"] = missing_json(e);
             } catch (const DegenerateTriple& e) {
               body["status"] = "degenerate";
               body["detail"] = e.what();
             }
             send_json(res, 200, body);
           }));

  srv.Post("/enroll", guarded([this, probe_feature](const httplib::Request& req, httplib::Response& res) {
             const Payload p = parse_payload(req);
             const std::string user = require_user(p);
             if (!p.palm) throw HttpError{400, "bad_request", "missing palm"};
             const Hand palm = parse_palm(*p.palm);
             {
               std::shared_lock lock(store_mutex_);
               if (store_.count(user, palm) >= kTemplatesPerPalm) {
                 throw HttpError{409, "already_complete", "palm already has three templates"};
               }
             }
             const FeatureVector f = probe_feature(decode_input(p));
             std::size_t count = 0;
             {
               std::unique_lock lock(store_mutex_);
               try {
                 count = store_.append(user, palm, f);
               } catch (const AlreadyComplete& e) {
                 throw HttpError{409, "already_complete", e.what()};
               }
             }
             send_json(res, 200, {{"user", user}, {"palm", std::string(to_string(palm))}, {"count", count}});
           }));

  srv.Post("/verify", guarded([this, probe_feature](const httplib::Request& req, httplib::Response& res) {
             const Payload p = parse_payload(req);
             const std::string user = require_user(p);
             {
               std::shared_lock lock(store_mutex_);
               if (!store_.has_user(user)) throw HttpError{404, "unknown_user", "no enrollment for user"};
               bool any_complete = false;
               for (const auto* r : store_.records_of(user)) any_complete = any_complete || r->complete();
               if (!any_complete) {
                 throw HttpError{409, "enrollment_incomplete", "no palm has three enrolled templates"};
               }
             }
             const FeatureVector probe = probe_feature(decode_input(p));

             std::vector<FeatureVector> gallery;
             std::vector<Hand> owner;
             {
               std::shared_lock lock(store_mutex_);
               for (const auto* r : store_.records_of(user)) {
                 for (const auto& f : r->features) {
                   gallery.push_back(f);
                   owner.push_back(r->palm);
                 }
               }
             }
             if (gallery.empty()) throw HttpError{409, "enrollment_incomplete", "enrollment was reset"};
             const GalleryMatch best = match_against_gallery(probe, gallery);
             const MatchDecision d = decide(best.score, config_.threshold);
             const bool ok = d.outcome == MatchOutcome::success;
             send_json(res, 200,
                       {{"user", user},
                        {"score", d.score},
                        {"threshold", d.threshold},
                        {"outcome", std::string(to_string(d.outcome))},
                        {"message", ok ? kVerifySuccessMessage : kVerifyFailMessage},
                        {"palm", std::string(to_string(owner[best.index]))}});
           }));

  srv.Get(R"(/enrollments/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string user = req.matches[1];
            std::shared_lock lock(store_mutex_);
            send_json(res, 200,
                      {{"user", user},
                       {"left", store_.count(user, Hand::left)},
                       {"right", store_.count(user, Hand::right)},
                       {"required", kTemplatesPerPalm}});
          }));

  srv.Delete(R"(/enrollments/([^/]+)/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
               const std::string user = req.matches[1];
               const Hand palm = parse_palm(req.matches[2]);
               std::unique_lock lock(store_mutex_);
               if (!store_.reset(user, palm)) throw HttpError{404, "unknown_palm", "no enrollment for that palm"};
               send_json(res, 200, {{"user", user}, {"palm", std::string(to_string(palm))}, {"count", 0}});
             }));

  if (config_.static_dir) {
    if (!srv.set_mount_point("/", config_.static_dir->string())) {
      throw DataError("static directory does not exist: " + config_.static_dir->string());
    }
  }
}

}  // namespace palmroi
