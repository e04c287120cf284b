#pragma once

// HTTP enrollment/verification service.
//
// Endpoints (all responses are JSON):
//   POST   /detect                     image [, annotation]
//   POST   /enroll                     user, palm, image [, annotation]
//   POST   /verify                     user, image [, annotation]
//   GET    /enrollments/{user}
//   DELETE /enrollments/{user}/{palm}
//   GET    /health
//
// Requests are either multipart/form-data (an "image" file part plus text
// parts) or application/json with the image as a base64 string field.
// "annotation" carries a sidecar annotation document for the oracle
// detector backend. See README.md for the response fields.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

#include "palmroi/matching.hpp"
#include "palmroi/pipeline.hpp"
#include "palmroi/template_store.hpp"

namespace httplib {
class Server;
}

namespace palmroi {

inline constexpr const char* kScanFailMessage = "Scan fail, please take photo again";
inline constexpr const char* kVerifySuccessMessage = "Palmprint Verification Success";
inline constexpr const char* kVerifyFailMessage = "Palmprint Verification Fail";

struct ServiceConfig {
  double threshold = kDefaultThreshold;
  double conf_min = kDefaultConfMin;
  int roi_size = kDefaultRoiSize;
  std::filesystem::path store_path = "palmroi_templates.json";
  std::optional<std::filesystem::path> static_dir;
};

/// Builds the detector for one request. The annotation is present when the
/// client sent one.
using DetectorFactory = std::function<std::unique_ptr<DetectorBackend>(const std::optional<PalmAnnotation>&)>;

/// Zero-jitter oracle for annotated requests, an empty detector otherwise.
DetectorFactory oracle_detector_factory(BoxSizing sizing = {});

class PalmService {
 public:
  /// Opens the template store; throws DataError when it cannot.
  PalmService(ServiceConfig config, std::unique_ptr<EmbedderBackend> embedder, DetectorFactory detectors);
  ~PalmService();

  PalmService(const PalmService&) = delete;
  PalmService& operator=(const PalmService&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Returns the bound
  /// port, throws Error when the address is unavailable.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Requires a successful bind().
  void listen();
  void stop();

  const ServiceConfig& config() const { return config_; }

 private:
  void register_routes();

  ServiceConfig config_;
  std::unique_ptr<EmbedderBackend> embedder_;
  DetectorFactory detectors_;
  TemplateStore store_;
  mutable std::shared_mutex store_mutex_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace palmroi
