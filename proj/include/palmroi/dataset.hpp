#pragma once

// Mobile palmprint dataset schema: sample names, manifests, partitions and
// rotation augmentation for detector training sets.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "palmroi/geometry.hpp"
#include "palmroi/image.hpp"

namespace palmroi {

inline constexpr std::uint64_t kDefaultSeed = 20200101;

enum class Device { huawei, xiaomi };

std::string_view to_string(Device device);

/// <subject:3>_<session:1>_<device h|m>_<hand l|r>_<index:2>.jpg
struct SampleId {
  int subject = 1;  // 1..999
  int session = 1;  // 1..2
  Device device = Device::huawei;
  Hand hand = Hand::left;
  int index = 1;  // 1..99

  friend auto operator<=>(const SampleId&, const SampleId&) = default;
};

bool is_valid(const SampleId& id);

/// Left and right palms of one person are distinct identities.
struct PalmIdentity {
  int subject = 0;
  Hand hand = Hand::left;

  friend auto operator<=>(const PalmIdentity&, const PalmIdentity&) = default;
};

inline PalmIdentity identity_of(const SampleId& id) { return {id.subject, id.hand}; }

SampleId parse_name(std::string_view name);
std::string format_name(const SampleId& id);

struct ManifestEntry {
  SampleId id;
  std::filesystem::path image;                     // relative to the dataset root
  std::optional<std::filesystem::path> annotation;  // relative to the dataset root
};

class Manifest {
 public:
  Manifest() = default;
  /// Throws DataError on duplicate SampleIds. Entries are kept sorted by id.
  explicit Manifest(std::vector<ManifestEntry> entries);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Sorted, unique subject numbers.
  std::vector<int> subjects() const;
  std::vector<PalmIdentity> identities() const;
  const ManifestEntry* find(const SampleId& id) const;

  /// Only the entries whose id is listed.
  Manifest subset(const std::vector<SampleId>& ids) const;

 private:
  std::vector<ManifestEntry> entries_;
};

/// Recursively collects every file whose name parses as a sample name; an
/// adjacent <stem>.ann.json becomes the annotation.
Manifest scan_directory(const std::filesystem::path& root);

/// Line format: `<name>\t<image path>\t<annotation path or ->`; `#` starts a comment.
std::string serialize_manifest(const Manifest& m);
Manifest parse_manifest(std::string_view text);
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

struct SplitSpec {
  std::vector<SampleId> train;
  std::vector<SampleId> val;
  std::vector<SampleId> test;
  std::uint64_t seed = kDefaultSeed;
};

std::vector<int> subjects_of(const std::vector<SampleId>& ids);

enum class SplitMode {
  by_sample,   // every source image is drawn independently
  by_subject,  // all images of a subject land in one partition
};

struct SplitRatio {
  int train = 8;
  int val = 1;
  int test = 1;
};

/// Parses "8:1:1".
SplitRatio parse_ratio(std::string_view text);

/// Seeded shuffle and train/val/test partition (8:1:1 by default).
SplitSpec detector_split(const Manifest& manifest, std::uint64_t seed = kDefaultSeed,
                         SplitRatio ratio = {}, SplitMode mode = SplitMode::by_sample);

/// Subject-disjoint train/test split; val stays empty. Without a seed the
/// lowest-numbered subjects go to training.
SplitSpec verifier_split(const Manifest& manifest, double train_fraction = 0.8,
                         std::optional<std::uint64_t> seed = std::nullopt);

/// k subject-disjoint folds; fold i holds subject chunk i as its test set.
std::vector<SplitSpec> kfold(const Manifest& manifest, int k = 5, std::uint64_t seed = kDefaultSeed);

/// `[train]`, `[val]`, `[test]` sections listing sample names.
std::string serialize_split(const SplitSpec& split);
SplitSpec parse_split(std::string_view text);

struct AugmentedSample {
  int version = 0;  // j
  double angle = 0.0;
  Image image;
  PalmAnnotation annotation;
  std::vector<BoxSpec> boxes;
};

struct SkippedRotation {
  int version = 0;
  double angle = 0.0;
  std::string reason;
};

struct AugmentResult {
  std::vector<AugmentedSample> samples;
  std::vector<SkippedRotation> skipped;
};

inline constexpr int kDefaultCanvas = 416;

/// J rotated copies at angles j * 360 / J on an s_f x s_f canvas, boxes
/// recomputed from the rotated points.
AugmentResult augment_rotations(const Image& image, const PalmAnnotation& ann, int versions,
                                int canvas = kDefaultCanvas, const BoxSizing& sizing = {},
                                CanvasPolicy policy = CanvasPolicy::skip);

/// Rotation angles used by augment_rotations.
std::vector<double> rotation_angles(int versions);

}  // namespace palmroi
