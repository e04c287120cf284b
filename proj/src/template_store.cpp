#include "palmroi/template_store.hpp"

#include <bit>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "base64.hpp"

namespace palmroi {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "store format assumes a little-endian host");

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string encode_feature(const FeatureVector& f) {
  std::vector<std::uint8_t> bytes(kFeatureDim * sizeof(float));
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    const float v = static_cast<float>(f.values()[i]);
    std::memcpy(bytes.data() + i * sizeof(float), &v, sizeof(float));
  }
  return detail::base64_encode(bytes);
}

FeatureVector decode_feature(const std::string& text) {
  const auto bytes = detail::base64_decode(text);
  if (!bytes || bytes->size() != kFeatureDim * sizeof(float)) {
    throw DataError("template store: malformed feature blob");
  }
  std::vector<double> values(kFeatureDim);
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    float v;
    std::memcpy(&v, bytes->data() + i * sizeof(float), sizeof(float));
    values[i] = v;
  }
  return FeatureVector(std::move(values), true);
}

Hand parse_palm(const std::string& s) {
  if (s == "left") return Hand::left;
  if (s == "right") return Hand::right;
  throw DataError("template store: unknown palm '" + s + "'");
}

}  // namespace

FeatureVector quantize(const FeatureVector& f) {
  std::vector<double> values(kFeatureDim);
  for (std::size_t i = 0; i < kFeatureDim; ++i) values[i] = static_cast<float>(f.values()[i]);
  return FeatureVector(std::move(values), f.normalized());
}

TemplateStore::TemplateStore(std::filesystem::path path) : path_(std::move(path)) {
  namespace fs = std::filesystem;
  const fs::path parent = path_.has_parent_path() ? path_.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) {
    throw DataError("template store directory does not exist: " + parent.string());
  }
  if (fs::exists(path_)) {
    std::ifstream in(path_);
    if (!in) throw DataError("cannot read template store " + path_.string());
    std::stringstream ss;
    ss << in.rdbuf();
    load(ss.str());
  }
}

void TemplateStore::load(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("version").get<int>() != 1) throw DataError("template store: unsupported version");
    for (const auto& r : doc.at("records")) {
      TemplateRecord rec;
      rec.user = r.at("user").get<std::string>();
      rec.palm = parse_palm(r.at("palm").get<std::string>());
      rec.created_at = r.at("created_at").get<std::string>();
      for (const auto& f : r.at("features")) rec.features.push_back(decode_feature(f.get<std::string>()));
      if (rec.features.size() > kTemplatesPerPalm) throw DataError("template store: more than three features");
      records_[{rec.user, rec.palm}] = std::move(rec);
    }
  } catch (const json::exception& e) {
    throw DataError("template store " + path_.string() + " is malformed: " + e.what());
  }
}

bool TemplateStore::has_user(const std::string& user) const {
  return find(user, Hand::left) != nullptr || find(user, Hand::right) != nullptr;
}

std::size_t TemplateStore::count(const std::string& user, Hand palm) const {
  const TemplateRecord* r = find(user, palm);
  return r ? r->features.size() : 0;
}

const TemplateRecord* TemplateStore::find(const std::string& user, Hand palm) const {
  auto it = records_.find({user, palm});
  return it == records_.end() ? nullptr : &it->second;
}

std::vector<const TemplateRecord*> TemplateStore::records_of(const std::string& user) const {
  std::vector<const TemplateRecord*> out;
  for (Hand h : {Hand::left, Hand::right}) {
    if (const TemplateRecord* r = find(user, h)) out.push_back(r);
  }
  return out;
}

std::size_t TemplateStore::append(const std::string& user, Hand palm, const FeatureVector& feature) {
  const bool fresh = records_.find({user, palm}) == records_.end();
  TemplateRecord& rec = records_[{user, palm}];
  if (rec.complete()) throw AlreadyComplete("palm already holds three templates");
  rec.user = user;
  rec.palm = palm;
  if (rec.features.empty()) rec.created_at = now_utc();
  rec.features.push_back(quantize(feature));
  try {
    save();
  } catch (...) {
    rec.features.pop_back();
    if (fresh) records_.erase({user, palm});
    throw;
  }
  return rec.features.size();
}

bool TemplateStore::reset(const std::string& user, Hand palm) {
  auto it = records_.find({user, palm});
  if (it == records_.end()) return false;
  it->second.features.clear();
  save();
  return true;
}

std::string TemplateStore::serialize() const {
  json records = json::array();
  for (const auto& [key, rec] : records_) {
    json feats = json::array();
    for (const auto& f : rec.features) feats.push_back(encode_feature(f));
    records.push_back({{"user", rec.user},
                       {"palm", std::string(to_string(rec.palm))},
                       {"created_at", rec.created_at},
                       {"features", feats}});
  }
  return json{{"version", 1}, {"records", records}}.dump(1) + "\n";
}

void TemplateStore::save() const {
  namespace fs = std::filesystem;
  const fs::path tmp = path_.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write template store " + tmp.string());
    out << serialize();
    out.flush();
    if (!out) throw DataError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path_, ec);
  if (ec) throw DataError("cannot replace template store " + path_.string() + ": " + ec.message());
}

}  // namespace palmroi
