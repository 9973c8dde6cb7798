#include <fstream>
#include <map>
#include <algorithm>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "selfmentor/errors.hpp"
#include "selfmentor/evaluation.hpp"
#include "tempdir.hpp"

using namespace selfmentor;
using testing_support::tiny_bundle;
using testing_support::tiny_config;

namespace {

Mask from_bits(const std::vector<int>& bits, int w) {
  Mask m(static_cast<int>(bits.size()) / w, w);
  for (std::size_t i = 0; i < bits.size(); ++i) m.pixels[i] = static_cast<float>(bits[i]);
  return m;
}

// Straight pixel counting.
double ji_oracle(const Mask& a, const Mask& b) {
  int inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.pixels[i] >= 0.5f, y = b.pixels[i] >= 0.5f;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 100.0 : 100.0 * inter / uni;
}

}  // namespace

TEST_CASE("jaccard reference cases") {
  const Mask y = from_bits({1, 1, 1, 1, 0, 0, 0, 0}, 4);
  CHECK(jaccard(y, y) == 100.0);
  CHECK(jaccard(y, from_bits({0, 0, 0, 0, 1, 1, 1, 1}, 4)) == 0.0);
  const double two_of_four = jaccard(y, from_bits({0, 0, 1, 1, 1, 1, 0, 0}, 4));
  CHECK(std::fabs(two_of_four - 100.0 / 3.0) <= 0.01);
  CHECK(jaccard(Mask(2, 2), Mask(2, 2)) == 100.0);
  CHECK(jaccard(y, Mask(2, 4)) == 0.0);
  CHECK_THROWS_AS(jaccard(y, Mask(4, 2)), ShapeError);
}

TEST_CASE("jaccard thresholds soft predictions with >=") {
  const Mask y = from_bits({1, 0}, 2);
  CHECK(jaccard(y, Image(1, 2, {0.5f, 0.4999f})) == 100.0);
  CHECK(jaccard(y, Image(1, 2, {0.4999f, 0.4999f})) == 0.0);
  CHECK(jaccard(y, Image(1, 2, {0.9f, 0.5f})) == 50.0);
  CHECK(jaccard(y, Image(1, 2, {0.2f, 0.7f}), 0.1f) == 50.0);
}

TEST_CASE("jaccard symmetry, permutation invariance and range") {
  Rng rng(3);
  std::bernoulli_distribution bit(0.3);
  for (int trial = 0; trial < 200; ++trial) {
    Mask a(6, 7), b(6, 7);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a.pixels[i] = bit(rng);
      b.pixels[i] = bit(rng);
    }
    const double ab = jaccard(a, b);
    CHECK(ab == doctest::Approx(ji_oracle(a, b)));
    CHECK(ab == jaccard(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 100.0);
    std::vector<std::size_t> perm(a.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Mask pa(6, 7), pb(6, 7);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      pa.pixels[i] = a.pixels[perm[i]];
      pb.pixels[i] = b.pixels[perm[i]];
    }
    CHECK(jaccard(pa, pb) == ab);
  }
}

TEST_CASE("evaluate with perfect and all-black predictors") {
  DatasetBundle b = tiny_bundle(5);
  std::map<std::string, Mask> truth;
  for (const auto& s : b.test) truth[s.name] = *s.y;
  // Maps each test input back to its own mask by pixel equality.
  ModelFactory perfect = [&](std::uint64_t) -> Predictor {
    return [&](const Image& x) {
      for (const auto& s : b.test)
        if (s.x == x) return *s.y;
      return Image(x.height, x.width);
    };
  };
  ModelFactory black = [](std::uint64_t) -> Predictor {
    return [](const Image& x) { return Image(x.height, x.width); };
  };
  const auto seeds = seed_list(1, 3);
  CHECK(seeds.size() == 3);
  auto good = evaluate(perfect, b, seeds);
  REQUIRE(good.seeds.size() == 3);
  for (const auto& s : good.seeds) CHECK(s.mean == 100.0);
  CHECK(good.grand_mean == 100.0);
  auto bad = evaluate(black, b, seeds);
  CHECK(bad.grand_mean == 0.0);
  CHECK(bad.sample_names.size() == b.test.size());
}

TEST_CASE("grand mean is the mean of per-seed means") {
  DatasetBundle b = tiny_bundle(6);
  // Seed-dependent threshold shift gives different per-seed scores.
  ModelFactory noisy = [](std::uint64_t seed) -> Predictor {
    return [seed](const Image& x) {
      Image out = x;
      for (float& v : out.pixels) v = std::clamp(v + 0.2f * static_cast<float>(seed % 5) - 0.4f, 0.0f, 1.0f);
      return out;
    };
  };
  auto r = evaluate(noisy, b, {0, 1, 2, 3, 4});
  double sum = 0.0;
  for (const auto& s : r.seeds) {
    double seed_sum = 0.0;
    for (double ji : s.per_sample) {
      CHECK(ji >= 0.0);
      CHECK(ji <= 100.0);
      seed_sum += ji;
    }
    CHECK(s.mean == doctest::Approx(seed_sum / s.per_sample.size()));
    sum += s.mean;
  }
  CHECK(r.grand_mean == doctest::Approx(sum / 5));
  CHECK(r.seeds.front().mean != r.seeds.back().mean);
}

TEST_CASE("evaluate contract errors") {
  DatasetBundle b = tiny_bundle(7);
  ModelFactory f = [](std::uint64_t) -> Predictor { return [](const Image& x) { return x; }; };
  CHECK_THROWS_AS(evaluate(f, b, {}), ContractError);
  b.test.clear();
  CHECK_THROWS_AS(evaluate(f, b, {1}), ContractError);
}

TEST_CASE("report text layout") {
  EvalReport r;
  r.config = EvalConfigEcho{"self-mentoring", 3, 1, 5.0, LossKind::mse};
  r.sample_names = {"a.pgm", "b.pgm"};
  r.seeds = {SeedResult{11, {100.0, 50.0}, 75.0}, SeedResult{12, {0.0, 50.0}, 25.0}};
  r.grand_mean = 50.0;
  const std::string text = format_report(r);
  CHECK(text.find("method: self-mentoring\n") == 0);
  CHECK(text.find("n_s_tr: 3\n") != std::string::npos);
  CHECK(text.find("loss_kind: mse\n") != std::string::npos);
  CHECK(text.find("seed.1: 12\n") != std::string::npos);
  CHECK(text.find("seed.0.mean_ji: 75.000000\n") != std::string::npos);
  CHECK(text.find("grand_mean_ji: 50.000000\n") != std::string::npos);
  CHECK(text.find("\n\nseed_index,sample,ji\n0,a.pgm,100.000000\n0,b.pgm,50.000000\n1,a.pgm,0.000000\n") !=
        std::string::npos);

  testing_support::TempDir dir("report");
  write_report(r, dir / "r.txt");
  std::ifstream in(dir / "r.txt");
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == text);
}

TEST_CASE("U-net predictor returns soft masks of the input size") {
  auto net = std::make_shared<const UNet>(UNet::build(tiny_config(), 1));
  Predictor p = unet_predictor(net);
  Image out = p(Image(16, 16, 0.3f));
  CHECK(out.same_size(Image(16, 16)));
  for (float v : out.pixels) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
}

TEST_CASE("self-training baseline pseudo-labels every unlabeled image") {
  DatasetBundle b = tiny_bundle(8);
  PhaseConfig phase;
  phase.max_epochs = 2;
  phase.optimizer.learning_rate = 1e-3;
  auto r = self_training_baseline(b, tiny_config(), phase, 4);
  CHECK(r.pseudo_labels == static_cast<int>(b.u_train.size() + b.u_val.size()));
  CHECK(r.teacher_phase.epochs == 2);
  CHECK(r.student_phase.epochs == 2);
}

TEST_CASE("self-training without unlabeled data is plain pretraining") {
  DatasetBundle b = tiny_bundle(9);
  b.u_train.clear();
  b.u_val.clear();
  PhaseConfig phase;
  phase.max_epochs = 3;
  phase.optimizer.learning_rate = 1e-3;
  auto r = self_training_baseline(b, tiny_config(), phase, 4);
  CHECK(r.pseudo_labels == 0);
  UNet plain = UNet::build(tiny_config(), derive_seed(4, "student"));
  pretrain_trainee(plain, b.s_train, b.s_val, phase, derive_seed(4, "student-train"));
  CHECK(serialize_checkpoint(plain) == serialize_checkpoint(r.student));
}

TEST_CASE("large U-net width selection") {
  const UNetConfig trainee{3, 5};
  CHECK(select_base_filters(parameter_count(trainee), trainee) == 5);
  CHECK_THROWS_AS(select_base_filters(parameter_count(trainee) - 1, trainee), ContractError);
  int previous = 0;
  for (std::int64_t target = parameter_count(trainee); target < 3000000; target = target * 5 / 4) {
    const int f = select_base_filters(target, trainee);
    CHECK(f >= previous);
    previous = f;
    CHECK(parameter_count(UNetConfig{3, f}) >= target);
    CHECK(parameter_count(UNetConfig{3, f - 1}) < target);
  }
  CHECK(select_base_filters(8000000, trainee) > 30);
}

TEST_CASE("large U-net baseline trains the widened net") {
  DatasetBundle b = tiny_bundle(10);
  PhaseConfig phase;
  phase.max_epochs = 1;
  const UNetConfig trainee = tiny_config();
  auto r = large_unet_baseline(b, parameter_count(trainee) * 3, trainee, phase, 2);
  CHECK(r.base_filters > trainee.base_filters);
  CHECK(r.net.config().base_filters == r.base_filters);
  CHECK(r.net.parameter_count() >= parameter_count(trainee) * 3);
  CHECK(r.phase.epochs == 1);
}
