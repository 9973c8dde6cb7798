#pragma once

#include <vector>

#include "selfmentor/data.hpp"
#include "selfmentor/rng.hpp"

namespace selfmentor {

enum class NoiseKind { none, salt_pepper, gaussian, uniform };

struct AugmentConfig {
  int output_set_size = 100;
  // Drawn uniformly from this list for supervised inputs.
  std::vector<NoiseKind> noise_kinds{NoiseKind::none, NoiseKind::salt_pepper, NoiseKind::gaussian,
                                     NoiseKind::uniform};
  double geometric_probability = 0.5;
  double salt_pepper_fraction = 0.05;
  double gaussian_sigma = 0.15;
  double uniform_half_width = 0.5;

  void validate() const;
};

// One of the 8 rotation (0/90/180/270 degrees) × horizontal flip combos;
// code 0 is the identity. The flip is applied before the rotation.
struct GeometricTransform {
  int quarter_turns = 0;
  bool flip = false;

  static GeometricTransform from_code(int code);
  int code() const { return quarter_turns + (flip ? 4 : 0); }
  bool is_identity() const { return quarter_turns == 0 && !flip; }
  GeometricTransform inverse() const;
};

Image apply_transform(const Image& image, const GeometricTransform& t);

// With geometric_probability draw one of the 8 combos uniformly, else the identity.
GeometricTransform draw_transform(const AugmentConfig& config, Rng& rng);

// Sets round(fraction*H*W) distinct pixels to 0 or 1 with equal probability;
// returns the number of positions drawn.
int salt_pepper(Image& image, double fraction, Rng& rng);
void apply_noise(Image& image, NoiseKind kind, const AugmentConfig& config, Rng& rng);

struct AugmentedSample {
  Sample sample;
  GeometricTransform transform;
  NoiseKind noise = NoiseKind::none;
  std::size_t source = 0;
};

// Source pairs are drawn uniformly with replacement. The geometric
// transform is shared by x and y; noise touches x only.
std::vector<AugmentedSample> augment_supervised_detailed(const std::vector<Sample>& source,
                                                         const AugmentConfig& config, Rng& rng);
std::vector<Sample> augment_supervised(const std::vector<Sample>& source,
                                       const AugmentConfig& config, Rng& rng);

// Geometric transforms only.
std::vector<AugmentedSample> augment_unlabeled_detailed(const std::vector<Sample>& source,
                                                        const AugmentConfig& config, Rng& rng);
std::vector<Sample> augment_unlabeled(const std::vector<Sample>& source,
                                      const AugmentConfig& config, Rng& rng);

}  // namespace selfmentor
