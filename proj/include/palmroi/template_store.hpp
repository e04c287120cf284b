#pragma once

// Enrolled palm templates, persisted as one JSON document. Each feature is
// stored as 512 little-endian float32 values, base64 encoded. Saves write a
// temporary file and rename it over the store.
//
// The store itself is not synchronised; PalmService guards it.

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "palmroi/errors.hpp"
#include "palmroi/matching.hpp"

namespace palmroi {

inline constexpr std::size_t kTemplatesPerPalm = 3;

class AlreadyComplete : public Error {
 public:
  using Error::Error;
};

struct TemplateRecord {
  std::string user;
  Hand palm = Hand::left;
  std::vector<FeatureVector> features;  // at most kTemplatesPerPalm, normalised
  std::string created_at;               // ISO-8601 UTC of the first stored feature

  bool complete() const { return features.size() == kTemplatesPerPalm; }
};

/// Rounds every component to float32, the precision kept on disk.
FeatureVector quantize(const FeatureVector& f);

class TemplateStore {
 public:
  /// Opens `path`, loading it when it exists. Throws DataError when the
  /// parent directory is missing or the file is not a valid store.
  explicit TemplateStore(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }

  bool has_user(const std::string& user) const;
  std::size_t count(const std::string& user, Hand palm) const;
  const TemplateRecord* find(const std::string& user, Hand palm) const;
  std::vector<const TemplateRecord*> records_of(const std::string& user) const;

  /// Adds a (quantised) feature and persists. Returns the new count.
  /// Throws AlreadyComplete when the palm already holds three features.
  std::size_t append(const std::string& user, Hand palm, const FeatureVector& feature);

  /// Clears a palm's features and persists. False when no record exists.
  bool reset(const std::string& user, Hand palm);

  std::string serialize() const;
  void save() const;

 private:
  void load(const std::string& text);

  std::filesystem::path path_;
  std::map<std::pair<std::string, Hand>, TemplateRecord> records_;
};

}  // namespace palmroi
