#include <cmath>
#include <set>

#include "doctest.h"
#include "selfmentor/augment.hpp"
#include "selfmentor/errors.hpp"

using namespace selfmentor;

namespace {

Image ramp(int h, int w) {
  Image im(h, w);
  for (std::size_t i = 0; i < im.size(); ++i) im.pixels[i] = static_cast<float>(i) / im.size();
  return im;
}

// Independent index arithmetic: flip first, then k counter-clockwise quarter turns.
float expected_pixel(const Image& in, GeometricTransform t, int r, int c) {
  const int n = in.height;
  for (int k = 0; k < t.quarter_turns; ++k) {
    // Undo one CCW turn: out(r,c) = in(c, n-1-r).
    const int pr = c, pc = n - 1 - r;
    r = pr;
    c = pc;
  }
  if (t.flip) c = n - 1 - c;
  return in.at(r, c);
}

std::vector<Sample> labeled(int n) {
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    Mask y(8, 8);
    y.at(i % 8, (3 * i) % 8) = 1.0f;
    y.at(0, i % 8) = 1.0f;
    out.push_back(Sample{"s" + std::to_string(i), ramp(8, 8), y});
  }
  return out;
}

}  // namespace

TEST_CASE("transform codes and inverses") {
  std::set<std::vector<float>> images;
  const Image im = ramp(5, 5);
  for (int code = 0; code < 8; ++code) {
    auto t = GeometricTransform::from_code(code);
    CHECK(t.code() == code);
    CHECK(t.is_identity() == (code == 0));
    Image out = apply_transform(im, t);
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 5; ++c) CHECK(out.at(r, c) == expected_pixel(im, t, r, c));
    CHECK(apply_transform(out, t.inverse()) == im);
    images.insert(out.pixels);
  }
  CHECK(images.size() == 8);
  CHECK(apply_transform(im, GeometricTransform{1, false}).at(0, 0) == im.at(0, 4));
}

TEST_CASE("transforms of non-square images") {
  Image im = ramp(2, 3);
  Image r = apply_transform(im, GeometricTransform{1, false});
  CHECK(r.height == 3);
  CHECK(r.width == 2);
  CHECK(apply_transform(r, GeometricTransform{3, false}) == im);
}

TEST_CASE("geometric probability and combo frequencies") {
  AugmentConfig cfg;
  Rng rng(11);
  const int n = 80000;
  int identity = 0;
  std::vector<int> counts(8, 0);
  for (int i = 0; i < n; ++i) {
    auto t = draw_transform(cfg, rng);
    identity += t.is_identity();
    ++counts[t.code()];
  }
  // p = 0.5: identity with probability 0.5 + 0.5/8 = 9/16.
  CHECK(identity / double(n) == doctest::Approx(9.0 / 16).epsilon(0.02));
  for (int code = 1; code < 8; ++code) CHECK(counts[code] / double(n) == doctest::Approx(1.0 / 16).epsilon(0.05));

  cfg.geometric_probability = 1.0;
  identity = 0;
  for (int i = 0; i < n; ++i) identity += draw_transform(cfg, rng).is_identity();
  CHECK(identity / double(n) == doctest::Approx(1.0 / 8).epsilon(0.05));
  cfg.geometric_probability = 0.0;
  for (int i = 0; i < 100; ++i) CHECK(draw_transform(cfg, rng).is_identity());
}

TEST_CASE("salt and pepper touches exactly round(f*N) pixels") {
  Rng rng(2);
  for (double f : {0.0, 0.05, 0.1, 0.5, 1.0}) {
    Image im(32, 32, 0.5f);
    const int drawn = salt_pepper(im, f, rng);
    CHECK(drawn == std::lround(f * 1024));
    int changed = 0, zeros = 0;
    for (float v : im.pixels) {
      if (v != 0.5f) {
        ++changed;
        CHECK((v == 0.0f || v == 1.0f));
        zeros += v == 0.0f;
      }
    }
    CHECK(changed == drawn);
    if (drawn >= 500) CHECK(zeros / double(drawn) == doctest::Approx(0.5).epsilon(0.15));
  }
}

TEST_CASE("pixel noise keeps values in [0,1]") {
  AugmentConfig cfg;
  Rng rng(8);
  for (NoiseKind kind : {NoiseKind::gaussian, NoiseKind::uniform, NoiseKind::salt_pepper}) {
    Image im = ramp(16, 16);
    apply_noise(im, kind, cfg, rng);
    CHECK_FALSE(im == ramp(16, 16));
    for (float v : im.pixels) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
  Image im = ramp(16, 16);
  apply_noise(im, NoiseKind::none, cfg, rng);
  CHECK(im == ramp(16, 16));
}

TEST_CASE("augmented pairs share the geometric transform") {
  AugmentConfig cfg;
  cfg.noise_kinds = {NoiseKind::none};
  auto src = labeled(4);
  Rng rng(5);
  auto out = augment_supervised_detailed(src, cfg, rng);
  CHECK(out.size() == 100);
  for (const auto& a : out) {
    REQUIRE(a.sample.y.has_value());
    CHECK(a.sample.x == apply_transform(src[a.source].x, a.transform));
    CHECK(*a.sample.y == apply_transform(*src[a.source].y, a.transform));
    CHECK(is_binary(*a.sample.y));
  }
}

TEST_CASE("noise affects inputs only") {
  AugmentConfig cfg;
  auto src = labeled(3);
  Rng rng(6);
  std::set<NoiseKind> kinds;
  for (const auto& a : augment_supervised_detailed(src, cfg, rng)) {
    kinds.insert(a.noise);
    CHECK(*a.sample.y == apply_transform(*src[a.source].y, a.transform));
    if (a.noise == NoiseKind::none) CHECK(a.sample.x == apply_transform(src[a.source].x, a.transform));
  }
  CHECK(kinds.size() == 4);
}

TEST_CASE("unlabeled augmentation is geometric only") {
  AugmentConfig cfg;
  cfg.output_set_size = 30;
  std::vector<Sample> src{{"u0", ramp(8, 8), std::nullopt}, {"u1", ramp(8, 8), std::nullopt}};
  src[1].x.at(2, 3) = 0.0f;
  Rng rng(1);
  auto out = augment_unlabeled_detailed(src, cfg, rng);
  CHECK(out.size() == 30);
  for (const auto& a : out) {
    CHECK_FALSE(a.sample.y.has_value());
    CHECK(a.noise == NoiseKind::none);
    CHECK(a.sample.x == apply_transform(src[a.source].x, a.transform));
  }
}

TEST_CASE("consecutive draws differ and seeds reproduce") {
  AugmentConfig cfg;
  auto src = labeled(3);
  Rng a(9), b(9);
  auto first = augment_supervised(src, cfg, a);
  auto second = augment_supervised(src, cfg, a);
  auto replay = augment_supervised(src, cfg, b);
  bool differs = false;
  for (std::size_t i = 0; i < first.size(); ++i) {
    differs = differs || !(first[i].x == second[i].x);
    CHECK(first[i].x == replay[i].x);
    CHECK(first[i].name == replay[i].name);
  }
  CHECK(differs);
}

TEST_CASE("sources are drawn with replacement") {
  AugmentConfig cfg;
  cfg.output_set_size = 400;
  auto src = labeled(4);
  Rng rng(3);
  std::vector<int> hits(4, 0);
  for (const auto& a : augment_supervised_detailed(src, cfg, rng)) ++hits[a.source];
  for (int h : hits) CHECK(h == doctest::Approx(100).epsilon(0.3));
}

TEST_CASE("augmentation contract errors") {
  AugmentConfig cfg;
  Rng rng(1);
  CHECK_THROWS_AS(augment_supervised({}, cfg, rng), ContractError);
  std::vector<Sample> unlabeled{{"u", ramp(4, 4), std::nullopt}};
  CHECK_THROWS_AS(augment_supervised(unlabeled, cfg, rng), ContractError);
  AugmentConfig bad = cfg;
  bad.geometric_probability = 1.5;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = cfg;
  bad.output_set_size = 0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = cfg;
  bad.noise_kinds.clear();
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = cfg;
  bad.salt_pepper_fraction = -0.1;
  CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("unmodified supervised pairs occur with probability 9/64") {
  AugmentConfig cfg;
  cfg.output_set_size = 10000;
  auto src = labeled(2);
  Rng rng(12);
  int unchanged = 0;
  for (const auto& a : augment_supervised_detailed(src, cfg, rng)) {
    unchanged += a.sample.x == src[a.source].x && *a.sample.y == *src[a.source].y;
  }
  CHECK(std::fabs(unchanged / 10000.0 - 9.0 / 64) <= 0.01);
}
