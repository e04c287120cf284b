#include "palmroi/dataset.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "palmroi/errors.hpp"

namespace palmroi {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

int digits_value(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<SampleId> ids_of_subjects(const Manifest& m, const std::set<int>& subjects) {
  std::vector<SampleId> out;
  for (const auto& e : m.entries()) {
    if (subjects.count(e.id.subject)) out.push_back(e.id);
  }
  return out;
}

// Sizes of a ratio-weighted three-way partition of n items.
std::array<std::size_t, 3> partition_sizes(std::size_t n, SplitRatio r) {
  const double total = r.train + r.val + r.test;
  auto n_train = static_cast<std::size_t>(std::llround(n * (r.train / total)));
  auto n_val = static_cast<std::size_t>(std::llround(n * (r.val / total)));
  n_train = std::min(n_train, n);
  n_val = std::min(n_val, n - n_train);
  return {n_train, n_val, n - n_train - n_val};
}

}  // namespace

std::string_view to_string(Device device) { return device == Device::huawei ? "huawei" : "xiaomi"; }

bool is_valid(const SampleId& id) {
  return id.subject >= 1 && id.subject <= 999 && id.session >= 1 && id.session <= 2 &&
         id.index >= 1 && id.index <= 99;
}

SampleId parse_name(std::string_view name) {
  const std::string owned(name);
  auto fail = [&](std::size_t pos, const char* what) -> SampleId {
    throw MalformedName(owned, pos, what);
  };
  auto expect_digits = [&](std::size_t pos, std::size_t count, const char* field) {
    for (std::size_t i = 0; i < count; ++i) {
      if (pos + i >= name.size() || !is_digit(name[pos + i])) fail(pos + i, field);
    }
  };
  auto expect_sep = [&](std::size_t pos) {
    if (pos >= name.size() || name[pos] != '_') fail(pos, "expected '_'");
  };

  SampleId id;
  expect_digits(0, 3, "subject must be three digits");
  id.subject = digits_value(name.substr(0, 3));
  if (id.subject < 1) fail(0, "subject must be 001-999");
  expect_sep(3);
  expect_digits(4, 1, "session must be one digit");
  id.session = name[4] - '0';
  if (id.session < 1 || id.session > 2) fail(4, "session must be 1 or 2");
  expect_sep(5);
  if (name.size() <= 6) fail(6, "missing device");
  if (name[6] == 'h') {
    id.device = Device::huawei;
  } else if (name[6] == 'm') {
    id.device = Device::xiaomi;
  } else {
    fail(6, "device must be 'h' or 'm'");
  }
  expect_sep(7);
  if (name.size() <= 8) fail(8, "missing hand");
  if (name[8] == 'l') {
    id.hand = Hand::left;
  } else if (name[8] == 'r') {
    id.hand = Hand::right;
  } else {
    fail(8, "hand must be 'l' or 'r'");
  }
  expect_sep(9);
  expect_digits(10, 2, "index must be two digits");
  id.index = digits_value(name.substr(10, 2));
  if (id.index < 1) fail(10, "index must be 01-99");
  if (name.substr(12) != ".jpg") fail(12, "expected '.jpg' extension");
  return id;
}

std::string format_name(const SampleId& id) {
  if (!is_valid(id)) throw DataError("sample id out of range");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03d_%d_%c_%c_%02d.jpg", id.subject, id.session,
                id.device == Device::huawei ? 'h' : 'm', id.hand == Hand::left ? 'l' : 'r', id.index);
  return buf;
}

Manifest::Manifest(std::vector<ManifestEntry> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].id == entries_[i - 1].id) {
      throw DataError("duplicate sample " + format_name(entries_[i].id));
    }
  }
}

std::vector<int> Manifest::subjects() const {
  std::set<int> s;
  for (const auto& e : entries_) s.insert(e.id.subject);
  return {s.begin(), s.end()};
}

std::vector<PalmIdentity> Manifest::identities() const {
  std::set<PalmIdentity> s;
  for (const auto& e : entries_) s.insert(identity_of(e.id));
  return {s.begin(), s.end()};
}

const ManifestEntry* Manifest::find(const SampleId& id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const ManifestEntry& e, const SampleId& k) { return e.id < k; });
  return it != entries_.end() && it->id == id ? &*it : nullptr;
}

Manifest Manifest::subset(const std::vector<SampleId>& ids) const {
  std::vector<ManifestEntry> out;
  for (const auto& id : ids) {
    const ManifestEntry* e = find(id);
    if (e == nullptr) throw DataError("sample " + format_name(id) + " is not in the manifest");
    out.push_back(*e);
  }
  return Manifest(std::move(out));
}

Manifest scan_directory(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw DataError("not a directory: " + root.string());
  std::vector<ManifestEntry> entries;
  for (const auto& item : fs::recursive_directory_iterator(root)) {
    if (!item.is_regular_file()) continue;
    const std::string name = item.path().filename().string();
    SampleId id;
    try {
      id = parse_name(name);
    } catch (const MalformedName&) {
      continue;
    }
    ManifestEntry entry{id, fs::relative(item.path(), root), std::nullopt};
    const fs::path sidecar = item.path().parent_path() / (item.path().stem().string() + ".ann.json");
    if (fs::exists(sidecar)) entry.annotation = fs::relative(sidecar, root);
    entries.push_back(std::move(entry));
  }
  return Manifest(std::move(entries));
}

std::string serialize_manifest(const Manifest& m) {
  std::ostringstream os;
  os << "# palmroi manifest v1: name<TAB>image<TAB>annotation\n";
  for (const auto& e : m.entries()) {
    os << format_name(e.id) << '\t' << e.image.generic_string() << '\t'
       << (e.annotation ? e.annotation->generic_string() : "-") << '\n';
  }
  return os.str();
}

Manifest parse_manifest(std::string_view text) {
  std::vector<ManifestEntry> entries;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> fields;
    std::istringstream ls(t);
    std::string f;
    while (std::getline(ls, f, '\t')) fields.push_back(f);
    if (fields.size() != 3) {
      throw DataError("manifest line " + std::to_string(lineno) + ": expected 3 tab-separated fields");
    }
    ManifestEntry e{parse_name(fields[0]), fields[1], std::nullopt};
    if (fields[2] != "-") e.annotation = fields[2];
    entries.push_back(std::move(e));
  }
  return Manifest(std::move(entries));
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << serialize_manifest(m);
}

std::vector<int> subjects_of(const std::vector<SampleId>& ids) {
  std::set<int> s;
  for (const auto& id : ids) s.insert(id.subject);
  return {s.begin(), s.end()};
}

SplitRatio parse_ratio(std::string_view text) {
  SplitRatio r;
  char c1 = 0, c2 = 0;
  std::istringstream is{std::string(text)};
  if (!(is >> r.train >> c1 >> r.val >> c2 >> r.test) || c1 != ':' || c2 != ':' || r.train < 0 ||
      r.val < 0 || r.test < 0 || r.train + r.val + r.test == 0) {
    throw DataError("ratio must look like 8:1:1");
  }
  return r;
}

SplitSpec detector_split(const Manifest& manifest, std::uint64_t seed, SplitRatio ratio, SplitMode mode) {
  if (manifest.empty()) throw DataError("detector_split: empty manifest");
  std::mt19937_64 rng(seed);
  SplitSpec split;
  split.seed = seed;

  if (mode == SplitMode::by_sample) {
    std::vector<SampleId> ids;
    for (const auto& e : manifest.entries()) ids.push_back(e.id);
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto [n_train, n_val, n_test] = partition_sizes(ids.size(), ratio);
    split.train.assign(ids.begin(), ids.begin() + n_train);
    split.val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
    split.test.assign(ids.begin() + n_train + n_val, ids.end());
  } else {
    std::vector<int> subjects = manifest.subjects();
    std::shuffle(subjects.begin(), subjects.end(), rng);
    const auto [n_train, n_val, n_test] = partition_sizes(subjects.size(), ratio);
    split.train = ids_of_subjects(manifest, {subjects.begin(), subjects.begin() + n_train});
    split.val = ids_of_subjects(manifest, {subjects.begin() + n_train, subjects.begin() + n_train + n_val});
    split.test = ids_of_subjects(manifest, {subjects.begin() + n_train + n_val, subjects.end()});
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

SplitSpec verifier_split(const Manifest& manifest, double train_fraction, std::optional<std::uint64_t> seed) {
  std::vector<int> subjects = manifest.subjects();
  if (subjects.size() < 2) throw TooFewSubjects("verifier_split needs at least two subjects");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DataError("train fraction must lie in (0, 1)");
  }
  SplitSpec split;
  if (seed) {
    split.seed = *seed;
    std::mt19937_64 rng(*seed);
    std::shuffle(subjects.begin(), subjects.end(), rng);
  }
  const auto n = static_cast<long long>(subjects.size());
  const auto n_train = static_cast<std::size_t>(std::clamp(std::llround(n * train_fraction), 1LL, n - 1));
  split.train = ids_of_subjects(manifest, {subjects.begin(), subjects.begin() + n_train});
  split.test = ids_of_subjects(manifest, {subjects.begin() + n_train, subjects.end()});
  return split;
}

std::vector<SplitSpec> kfold(const Manifest& manifest, int k, std::uint64_t seed) {
  if (k < 2) throw DataError("kfold needs k >= 2");
  std::vector<int> subjects = manifest.subjects();
  if (subjects.size() < static_cast<std::size_t>(k)) {
    throw TooFewSubjects("kfold: " + std::to_string(subjects.size()) + " subjects for " +
                         std::to_string(k) + " folds");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(subjects.begin(), subjects.end(), rng);

  const std::size_t base = subjects.size() / k;
  const std::size_t extra = subjects.size() % k;
  std::vector<SplitSpec> folds;
  std::size_t begin = 0;
  for (int i = 0; i < k; ++i) {
    const std::size_t len = base + (static_cast<std::size_t>(i) < extra ? 1 : 0);
    std::set<int> test(subjects.begin() + begin, subjects.begin() + begin + len);
    std::set<int> train;
    for (int s : subjects) {
      if (!test.count(s)) train.insert(s);
    }
    SplitSpec fold;
    fold.seed = seed;
    fold.train = ids_of_subjects(manifest, train);
    fold.test = ids_of_subjects(manifest, test);
    folds.push_back(std::move(fold));
    begin += len;
  }
  return folds;
}

std::string serialize_split(const SplitSpec& split) {
  std::ostringstream os;
  os << "# palmroi split v1 seed=" << split.seed << '\n';
  auto section = [&](const char* name, const std::vector<SampleId>& ids) {
    os << '[' << name << "]\n";
    for (const auto& id : ids) os << format_name(id) << '\n';
  };
  section("train", split.train);
  section("val", split.val);
  section("test", split.test);
  return os.str();
}

SplitSpec parse_split(std::string_view text) {
  SplitSpec split;
  std::vector<SampleId>* current = nullptr;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      if (const auto pos = t.find("seed="); pos != std::string::npos) {
        split.seed = std::stoull(t.substr(pos + 5));
      }
      continue;
    }
    if (t == "[train]") {
      current = &split.train;
    } else if (t == "[val]") {
      current = &split.val;
    } else if (t == "[test]") {
      current = &split.test;
    } else if (current == nullptr) {
      throw DataError("split file: sample listed before any section header");
    } else {
      current->push_back(parse_name(t));
    }
  }
  return split;
}

std::vector<double> rotation_angles(int versions) {
  if (versions < 1) throw DataError("augmentation needs J >= 1");
  std::vector<double> angles;
  for (int j = 0; j < versions; ++j) angles.push_back(360.0 * j / versions);
  return angles;
}

AugmentResult augment_rotations(const Image& image, const PalmAnnotation& ann, int versions, int canvas,
                                const BoxSizing& sizing, CanvasPolicy policy) {
  if (canvas <= 0) throw DataError("canvas size must be positive");
  if (image.width != static_cast<int>(ann.image_width) || image.height != static_cast<int>(ann.image_height)) {
    throw DataError("annotation size does not match the image");
  }
  AugmentResult result;
  const auto angles = rotation_angles(versions);
  for (int j = 0; j < versions; ++j) {
    const double angle = angles[j];
    PalmAnnotation rotated;
    try {
      rotated = rotate_annotation(ann, angle, canvas, policy);
    } catch (const PointOutOfCanvas& e) {
      result.skipped.push_back({j, angle, e.what()});
      continue;
    }
    const CanvasTransform tf = augmentation_transform(ann.image_width, ann.image_height, angle, canvas, policy);
    const int side = static_cast<int>(tf.size);
    AugmentedSample s;
    s.version = j;
    s.angle = angle;
    s.image = warp(image, tf.map.inverse(), side, side, Border::constant);
    s.boxes = boxes_from_annotation(rotated, sizing);
    s.annotation = std::move(rotated);
    result.samples.push_back(std::move(s));
  }
  return result;
}

}  // namespace palmroi
