#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "base64.hpp"
#include "palmroi/annotation_io.hpp"
#include "palmroi/image_io.hpp"
#include "palmroi/service.hpp"
#include "support.hpp"

using namespace palmroi;
using namespace palmroi::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// A service on an ephemeral port, torn down on scope exit.
class RunningService {
 public:
  explicit RunningService(const fs::path& store, double threshold = kDefaultThreshold) {
    ServiceConfig cfg;
    cfg.store_path = store;
    cfg.threshold = threshold;
    service_ = std::make_unique<PalmService>(cfg, std::make_unique<StubEmbedder>(), oracle_detector_factory());
    port_ = service_->bind("127.0.0.1", 0);
    thread_ = std::thread([this] { service_->listen(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(10, 0);
    for (int i = 0; i < 200 && !client_->Get("/health"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ~RunningService() {
    service_->stop();
    thread_.join();
  }

  httplib::Client& client() { return *client_; }
  int port() const { return port_; }

 private:
  std::unique_ptr<PalmService> service_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

struct Sample {
  std::vector<std::uint8_t> png;
  std::string annotation;
  PalmAnnotation ann;
};

Sample make_sample(std::uint64_t seed) {
  Rng rng(seed);
  Sample s;
  s.ann = random_annotation(rng, 200, 150);
  s.annotation = serialize_annotation(s.ann);
  s.png = encode_image(random_image(rng, 200, 150), ".png");
  return s;
}

httplib::Result post_multipart(httplib::Client& c, const std::string& path, const std::string& user,
                               const std::string& palm, const Sample& s, bool with_annotation = true) {
  httplib::MultipartFormDataItems items{
      {"image", std::string(s.png.begin(), s.png.end()), "palm.png", "image/png"},
  };
  if (!user.empty()) items.push_back({"user", user, "", ""});
  if (!palm.empty()) items.push_back({"palm", palm, "", ""});
  if (with_annotation) items.push_back({"annotation", s.annotation, "", ""});
  return c.Post(path, items);
}

json body_of(const httplib::Result& r) { return json::parse(r->body); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("health reports the threshold") {
  const fs::path dir = scratch_dir("svc_health");
  RunningService svc(dir / "store.json");
  auto r = svc.client().Get("/health");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(body_of(r)["threshold"] == 0.5014);
  CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
  fs::remove_all(dir);
}

TEST_CASE("detect") {
  const fs::path dir = scratch_dir("svc_detect");
  RunningService svc(dir / "store.json");
  const Sample s = make_sample(71);

  auto r = post_multipart(svc.client(), "/detect", "", "", s);
  REQUIRE(r);
  CHECK(r->status == 200);
  json b = body_of(r);
  CHECK(b["status"] == "ok");
  CHECK(b["detections"].size() == 3);
  const RoiQuad q = roi_quad(frame_from_triple(derive_triple(s.ann)));
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(b["roi_quad"]["corners"][k]["x"].get<double>() - q.corners[k].x) < 1e-9);
    CHECK(std::abs(b["roi_quad"]["corners"][k]["y"].get<double>() - q.corners[k].y) < 1e-9);
  }

  r = post_multipart(svc.client(), "/detect", "", "", s, false);
  REQUIRE(r);
  CHECK(r->status == 200);
  b = body_of(r);
  CHECK(b["status"] == "incomplete");
  CHECK(b["missing"].size() == 2);

  Sample truncated = s;
  truncated.png.resize(truncated.png.size() / 2);
  r = post_multipart(svc.client(), "/detect", "", "", truncated);
  REQUIRE(r);
  CHECK(r->status == 400);
  fs::remove_all(dir);
}

TEST_CASE("json and raw request bodies") {
  const fs::path dir = scratch_dir("svc_json");
  RunningService svc(dir / "store.json");
  const Sample s = make_sample(72);
  json req{{"image", detail::base64_encode(s.png)}, {"annotation", json::parse(s.annotation)}};
  auto r = svc.client().Post("/detect", req.dump(), "application/json");
  REQUIRE(r);
  CHECK(body_of(r)["status"] == "ok");

  req = {{"user", "kim"}, {"palm", "right"}, {"image", detail::base64_encode(s.png)}, {"annotation", s.annotation}};
  r = svc.client().Post("/enroll", req.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(body_of(r)["count"] == 1);

  httplib::Params params{{"user", "kim"}, {"palm", "right"}, {"annotation", s.annotation}};
  r = svc.client().Post("/enroll?" + httplib::detail::params_to_query_str(params),
                        std::string(s.png.begin(), s.png.end()), "image/png");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(body_of(r)["count"] == 2);

  r = svc.client().Post("/enroll", "{\"image\": \"@@@\", \"user\": \"kim\", \"palm\": \"right\"}", "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);
  r = svc.client().Post("/enroll", "garbage", "text/plain");
  REQUIRE(r);
  CHECK(r->status == 400);
  fs::remove_all(dir);
}

TEST_CASE("enroll, verify, reset, restart") {
  const fs::path dir = scratch_dir("svc_flow");
  const fs::path store = dir / "store.json";
  const Sample s = make_sample(73);
  const Sample other = make_sample(74);
  std::string bytes;
  {
    RunningService svc(store);
    auto& c = svc.client();

    auto r = c.Get("/enrollments/alex");
    CHECK(body_of(r)["left"] == 0);
    CHECK(body_of(r)["right"] == 0);

    r = post_multipart(c, "/verify", "alex", "", s);
    CHECK(r->status == 404);

    for (int k = 1; k <= 3; ++k) {
      if (k == 2) {
        r = post_multipart(c, "/verify", "alex", "", s);
        CHECK(r->status == 409);
      }
      r = post_multipart(c, "/enroll", "alex", "left", s);
      REQUIRE(r);
      CHECK(r->status == 200);
      CHECK(body_of(r)["count"] == k);
      CHECK(body_of(c.Get("/enrollments/alex"))["left"] == k);
    }
    CHECK(body_of(c.Get("/enrollments/alex"))["right"] == 0);

    r = post_multipart(c, "/enroll", "alex", "left", s);
    CHECK(r->status == 409);

    r = post_multipart(c, "/enroll", "alex", "right", s, false);
    CHECK(r->status == 422);
    CHECK(body_of(r)["message"] == kScanFailMessage);

    r = post_multipart(c, "/verify", "alex", "", s);
    REQUIRE(r);
    CHECK(r->status == 200);
    json b = body_of(r);
    CHECK(std::abs(b["score"].get<double>() - 1.0) < 1e-6);
    CHECK(b["outcome"] == "success");
    CHECK(b["message"] == kVerifySuccessMessage);
    CHECK(b["palm"] == "left");

    r = post_multipart(c, "/verify", "alex", "", other);
    b = body_of(r);
    CHECK(b["outcome"] == "fail");
    CHECK(b["message"] == kVerifyFailMessage);
    CHECK(std::abs(b["score"].get<double>()) < 0.5);

    bytes = slurp(store);
  }
  {
    RunningService svc(store);
    auto& c = svc.client();
    CHECK(slurp(store) == bytes);
    CHECK(body_of(c.Get("/enrollments/alex"))["left"] == 3);
    CHECK(body_of(post_multipart(c, "/verify", "alex", "", s))["outcome"] == "success");
    CHECK(slurp(store) == bytes);

    auto r = c.Delete("/enrollments/alex/left");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(body_of(r)["count"] == 0);
    CHECK(post_multipart(c, "/verify", "alex", "", s)->status == 409);
    CHECK(c.Delete("/enrollments/alex/right")->status == 404);
    CHECK(c.Delete("/enrollments/nobody/left")->status == 404);

    for (int k = 1; k <= 3; ++k) post_multipart(c, "/enroll", "alex", "left", s);
    CHECK(body_of(post_multipart(c, "/verify", "alex", "", s))["outcome"] == "success");
  }
  fs::remove_all(dir);
}

TEST_CASE("concurrent enrolls never exceed three") {
  const fs::path dir = scratch_dir("svc_conc");
  RunningService svc(dir / "store.json");
  const Sample s = make_sample(75);
  std::atomic<int> ok{0}, conflict{0};
  std::vector<std::thread> workers;
  for (int t = 0; t < 8; ++t) {
    workers.emplace_back([&] {
      httplib::Client c("127.0.0.1", svc.port());
      auto r = post_multipart(c, "/enroll", "sam", "right", s);
      if (r && r->status == 200) ++ok;
      if (r && r->status == 409) ++conflict;
    });
  }
  for (auto& w : workers) w.join();
  CHECK(ok == 3);
  CHECK(conflict == 5);
  CHECK(body_of(svc.client().Get("/enrollments/sam"))["right"] == 3);
  fs::remove_all(dir);
}

TEST_CASE("configured threshold is applied") {
  const fs::path dir = scratch_dir("svc_thr");
  RunningService svc(dir / "store.json", 0.9);
  CHECK(body_of(svc.client().Get("/health"))["threshold"] == 0.9);
  fs::remove_all(dir);
}

TEST_CASE("startup failures") {
  ServiceConfig cfg;
  cfg.store_path = "/nonexistent/dir/store.json";
  CHECK_THROWS_AS(PalmService(cfg, std::make_unique<StubEmbedder>(), oracle_detector_factory()), DataError);

  const fs::path dir = scratch_dir("svc_bind");
  RunningService first(dir / "a.json");
  cfg.store_path = dir / "b.json";
  PalmService second(cfg, std::make_unique<StubEmbedder>(), oracle_detector_factory());
  CHECK_THROWS_AS(second.bind("127.0.0.1", first.port()), Error);
  fs::remove_all(dir);
}

}  // TEST_SUITE
