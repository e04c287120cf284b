#include <doctest.h>

#include <cmath>

#include "palmroi/matching.hpp"
#include "support.hpp"

using namespace palmroi;
using namespace palmroi::testing;

namespace {

FeatureVector basis(std::size_t i, double scale = 1.0) {
  std::vector<double> v(kFeatureDim, 0.0);
  v[i] = scale;
  return FeatureVector(std::move(v));
}

class ThrowingEmbedder final : public EmbedderBackend {
 protected:
  FeatureVector do_embed(const Image&) const override { throw std::runtime_error("model exploded"); }
};

class SizeProbe final : public EmbedderBackend {
 public:
  mutable int seen_w = 0, seen_h = 0;

 protected:
  FeatureVector do_embed(const Image& roi) const override {
    seen_w = roi.width;
    seen_h = roi.height;
    return basis(0);
  }
};

}  // namespace

TEST_SUITE("matching") {

TEST_CASE("feature vectors are 512 long") {
  CHECK(FeatureVector().values().size() == 512);
  CHECK_THROWS_AS(FeatureVector(std::vector<double>(511)), std::invalid_argument);
}

TEST_CASE("normalize") {
  const FeatureVector n = normalize(basis(0, 2.0));
  CHECK(n.normalized());
  CHECK(n.values()[0] == 1.0);
  Rng rng(31);
  const FeatureVector u = random_unit(rng);
  const FeatureVector uu = normalize(u);
  for (std::size_t i = 0; i < kFeatureDim; ++i) CHECK(std::abs(u.values()[i] - uu.values()[i]) < 1e-9);
  CHECK_THROWS_AS(normalize(FeatureVector()), ZeroVector);
}

TEST_CASE("score examples") {
  const FeatureVector e0 = normalize(basis(0)), e1 = normalize(basis(1)), m0 = normalize(basis(0, -1.0));
  CHECK(score(e0, e0) == 1.0);
  CHECK(score(e0, e1) == 0.0);
  CHECK(score(e0, m0) == -1.0);
  CHECK_THROWS_AS(score(basis(0), e0), NotNormalized);
}

TEST_CASE("score properties") {
  Rng rng(32);
  for (int i = 0; i < 2000; ++i) {
    const FeatureVector f1 = random_unit(rng), f2 = random_unit(rng);
    const double s = score(f1, f2);
    CHECK(s == score(f2, f1));
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
    std::vector<double> a(f1.values().begin(), f1.values().end()), b(f2.values().begin(), f2.values().end());
    const double ka = uniform(rng, 1e-3, 1e3), kb = uniform(rng, 1e-3, 1e3);
    for (double& x : a) x *= ka;
    for (double& x : b) x *= kb;
    CHECK(std::abs(score(normalize(FeatureVector(a)), normalize(FeatureVector(b))) - s) < 1e-9);
  }
}

TEST_CASE("decide boundary") {
  CHECK(decide(0.5014, 0.5014).outcome == MatchOutcome::success);
  CHECK(decide(0.5013, 0.5014).outcome == MatchOutcome::fail);
  CHECK(decide(1.0, kDefaultThreshold).outcome == MatchOutcome::success);
  const MatchDecision d = decide(0.7, 0.6);
  CHECK(d.score == 0.7);
  CHECK(d.threshold == 0.6);
  CHECK(kDefaultThreshold == 0.5014);
}

TEST_CASE("match_against_gallery") {
  std::vector<FeatureVector> g{normalize(basis(0)), normalize(basis(1)), normalize(basis(2))};
  GalleryMatch m = match_against_gallery(normalize(basis(2)), g);
  CHECK(m.index == 2);
  CHECK(m.score == 1.0);

  // Probe e0 against {0.2, 0.9, 0.9}.
  const auto mix = [](double c) {
    std::vector<double> v(kFeatureDim, 0.0);
    v[0] = c;
    v[1] = std::sqrt(1 - c * c);
    return FeatureVector(v, true);
  };
  std::vector<FeatureVector> ties{mix(0.2), mix(0.9), mix(0.9)};
  m = match_against_gallery(normalize(basis(0)), ties);
  CHECK(m.index == 1);
  CHECK(m.score == doctest::Approx(0.9));

  CHECK_THROWS_AS(match_against_gallery(g[0], std::vector<FeatureVector>{}), EmptyGallery);
}

TEST_CASE("gallery argmax equals an exhaustive scan") {
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<FeatureVector> g;
    for (int k = 0; k < 20; ++k) g.push_back(random_unit(rng));
    const FeatureVector p = random_unit(rng);
    std::size_t best = 0;
    double best_s = -2;
    for (std::size_t k = 0; k < g.size(); ++k) {
      double s = 0;
      for (std::size_t i = 0; i < kFeatureDim; ++i) s += p.values()[i] * g[k].values()[i];
      if (s > best_s) {
        best_s = s;
        best = k;
      }
    }
    CHECK(match_against_gallery(p, g).index == best);
  }
}

TEST_CASE("stub embedder determinism and sensitivity") {
  Rng rng(34);
  const StubEmbedder stub(7);
  const Image img = random_image(rng, 224, 224);
  const FeatureVector f1 = embed(img, stub), f2 = embed(img, stub);
  CHECK(f1 == f2);
  CHECK_FALSE(f1.normalized());
  Image other = img;
  other.px(100, 100)[0] ^= 0x40;
  CHECK_FALSE(embed(other, stub) == f1);
  CHECK_FALSE(embed(img, StubEmbedder(8)) == f1);
}

TEST_CASE("embed resizes to the model input") {
  SizeProbe probe;
  embed(Image(100, 100), probe);
  CHECK(probe.seen_w == 224);
  CHECK(probe.seen_h == 224);
  CHECK_THROWS_AS(embed(Image(100, 50), probe), DataError);
}

TEST_CASE("backend errors surface as BackendFailure") {
  CHECK_THROWS_AS(embed(Image(224, 224), ThrowingEmbedder()), BackendFailure);
}

TEST_CASE("verify_pair") {
  Rng rng(35);
  const StubEmbedder stub;
  RoiImage a{random_image(rng, 224, 224), "a", {}};
  RoiImage b{random_image(rng, 224, 224), "b", {}};
  const MatchDecision same = verify_pair(a, a, stub);
  CHECK(std::abs(same.score - 1.0) < 1e-6);
  CHECK(same.outcome == MatchOutcome::success);

  // Flat rasters have no structure after mean removal.
  RoiImage flat{Image(224, 224, {0, 0, 0}), "flat", {}};
  CHECK_THROWS_AS(verify_pair(flat, a, stub), ZeroVector);
}

TEST_CASE("stub impostor scores on noise rasters stay small") {
  Rng rng(36);
  const StubEmbedder stub(3);
  std::uniform_int_distribution<int> byte(0, 255);
  const auto noise = [&] {
    Image img(224, 224);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(byte(rng));
    return normalize(embed(img, stub));
  };
  double sum = 0;
  const int pairs = 300;
  for (int i = 0; i < pairs; ++i) {
    const double s = score(noise(), noise());
    sum += std::abs(s);
    CHECK(decide(s, kDefaultThreshold).outcome == MatchOutcome::fail);
  }
  CHECK(sum / pairs < 0.2);
}

}  // TEST_SUITE
