#include "selfmentor/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selfmentor/errors.hpp"

namespace selfmentor {

void AugmentConfig::validate() const {
  if (output_set_size < 1) throw ContractError("augmentation output_set_size must be >= 1");
  if (noise_kinds.empty()) throw ContractError("augmentation needs at least one noise kind");
  if (!(geometric_probability >= 0.0 && geometric_probability <= 1.0)) {
    throw ContractError("geometric_probability must lie in [0,1]");
  }
  if (!(salt_pepper_fraction >= 0.0 && salt_pepper_fraction <= 1.0)) {
    throw ContractError("salt_pepper_fraction must lie in [0,1]");
  }
}

GeometricTransform GeometricTransform::from_code(int code) {
  if (code < 0 || code > 7) throw ContractError("geometric transform code must be in [0,7]");
  return GeometricTransform{code % 4, code >= 4};
}

GeometricTransform GeometricTransform::inverse() const {
  // Reflections are involutions; pure rotations invert by turning back.
  if (flip) return *this;
  return GeometricTransform{(4 - quarter_turns) % 4, false};
}

namespace {

Image flip_horizontal(const Image& in) {
  Image out(in.height, in.width);
  for (int r = 0; r < in.height; ++r)
    for (int c = 0; c < in.width; ++c) out.at(r, c) = in.at(r, in.width - 1 - c);
  return out;
}

// 90 degrees counter-clockwise.
Image rotate_quarter(const Image& in) {
  Image out(in.width, in.height);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) out.at(r, c) = in.at(c, in.width - 1 - r);
  return out;
}

}  // namespace

Image apply_transform(const Image& image, const GeometricTransform& t) {
  Image out = t.flip ? flip_horizontal(image) : image;
  for (int k = 0; k < t.quarter_turns; ++k) out = rotate_quarter(out);
  return out;
}

GeometricTransform draw_transform(const AugmentConfig& config, Rng& rng) {
  if (uniform(rng, 0.0, 1.0) >= config.geometric_probability) return {};
  return GeometricTransform::from_code(uniform_int(rng, 0, 7));
}

int salt_pepper(Image& image, double fraction, Rng& rng) {
  const int total = static_cast<int>(image.size());
  const int count = static_cast<int>(std::lround(fraction * total));
  std::vector<int> index(static_cast<std::size_t>(total));
  std::iota(index.begin(), index.end(), 0);
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < count; ++k) {
    const int j = uniform_int(rng, k, total - 1);
    std::swap(index[static_cast<std::size_t>(k)], index[static_cast<std::size_t>(j)]);
    image.pixels[static_cast<std::size_t>(index[static_cast<std::size_t>(k)])] = coin(rng) ? 1.0f : 0.0f;
  }
  return count;
}

void apply_noise(Image& image, NoiseKind kind, const AugmentConfig& config, Rng& rng) {
  switch (kind) {
    case NoiseKind::none:
      return;
    case NoiseKind::salt_pepper:
      salt_pepper(image, config.salt_pepper_fraction, rng);
      return;
    case NoiseKind::gaussian: {
      std::normal_distribution<double> noise(0.0, config.gaussian_sigma);
      for (float& v : image.pixels) v = static_cast<float>(std::clamp(v + noise(rng), 0.0, 1.0));
      return;
    }
    case NoiseKind::uniform: {
      std::uniform_real_distribution<double> noise(-config.uniform_half_width,
                                                   config.uniform_half_width);
      for (float& v : image.pixels) v = static_cast<float>(std::clamp(v + noise(rng), 0.0, 1.0));
      return;
    }
  }
}

std::vector<AugmentedSample> augment_supervised_detailed(const std::vector<Sample>& source,
                                                         const AugmentConfig& config, Rng& rng) {
  config.validate();
  if (source.empty()) throw ContractError("cannot augment an empty labeled set");
  std::vector<AugmentedSample> out;
  out.reserve(static_cast<std::size_t>(config.output_set_size));
  for (int k = 0; k < config.output_set_size; ++k) {
    AugmentedSample a;
    a.source = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(source.size()) - 1));
    const Sample& src = source[a.source];
    if (!src.y) throw ContractError("supervised augmentation needs labeled samples");
    a.transform = draw_transform(config, rng);
    a.noise = config.noise_kinds[static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<int>(config.noise_kinds.size()) - 1))];
    a.sample.name = src.name + "#aug" + std::to_string(k);
    a.sample.x = apply_transform(src.x, a.transform);
    a.sample.y = apply_transform(*src.y, a.transform);
    apply_noise(a.sample.x, a.noise, config, rng);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Sample> augment_supervised(const std::vector<Sample>& source,
                                       const AugmentConfig& config, Rng& rng) {
  std::vector<Sample> out;
  for (auto& a : augment_supervised_detailed(source, config, rng)) out.push_back(std::move(a.sample));
  return out;
}

std::vector<AugmentedSample> augment_unlabeled_detailed(const std::vector<Sample>& source,
                                                        const AugmentConfig& config, Rng& rng) {
  config.validate();
  if (source.empty()) throw ContractError("cannot augment an empty unlabeled set");
  std::vector<AugmentedSample> out;
  out.reserve(static_cast<std::size_t>(config.output_set_size));
  for (int k = 0; k < config.output_set_size; ++k) {
    AugmentedSample a;
    a.source = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(source.size()) - 1));
    const Sample& src = source[a.source];
    a.transform = draw_transform(config, rng);
    a.sample.name = src.name + "#aug" + std::to_string(k);
    a.sample.x = apply_transform(src.x, a.transform);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Sample> augment_unlabeled(const std::vector<Sample>& source,
                                      const AugmentConfig& config, Rng& rng) {
  std::vector<Sample> out;
  for (auto& a : augment_unlabeled_detailed(source, config, rng)) out.push_back(std::move(a.sample));
  return out;
}

}  // namespace selfmentor
