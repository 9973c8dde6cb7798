#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "selfmentor/data.hpp"
#include "selfmentor/rng.hpp"
#include "selfmentor/synthmask.hpp"
#include "selfmentor/unet.hpp"

namespace testing_support {

// Small depth-1 net; inputs must be multiples of 4.
inline selfmentor::UNetConfig tiny_config(int filters = 2) { return selfmentor::UNetConfig{1, filters}; }

// Labeled 16x16 ellipse images: bright object, dark background, mild noise.
inline std::vector<selfmentor::Sample> tiny_samples(int n, std::uint64_t seed, int side = 16) {
  using namespace selfmentor;
  Rng rng(seed);
  std::uniform_real_distribution<double> centre(0.35 * side, 0.65 * side), axis(0.15 * side, 0.3 * side),
      angle(0.0, 3.14159), noise(-0.05, 0.05);
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    Mask y = rasterize_ellipse(side, Ellipse{centre(rng), centre(rng), axis(rng), axis(rng), angle(rng)});
    Image x(side, side);
    for (std::size_t p = 0; p < x.size(); ++p) {
      x.pixels[p] = static_cast<float>(std::clamp(0.1 + 0.7 * y.pixels[p] + noise(rng), 0.0, 1.0));
    }
    out.push_back(Sample{"t" + std::to_string(seed) + "_" + std::to_string(i), x, y});
  }
  return out;
}

inline selfmentor::DatasetBundle tiny_bundle(std::uint64_t seed, int u_train = 8, int u_val = 3,
                                             int test = 4) {
  using namespace selfmentor;
  auto samples = tiny_samples(2 + 1 + (u_train - 2) + (u_val - 1) + test, seed);
  return split(samples, SplitCounts{2, 1, u_train, u_val, test}, SplitMode::iid, seed);
}

}  // namespace testing_support
