#pragma once

#include <cstdint>
#include <vector>

#include "selfmentor/image.hpp"
#include "selfmentor/rng.hpp"

namespace selfmentor {

struct Ellipse {
  double center_row = 0.0;
  double center_col = 0.0;
  double semi_axis_a = 1.0;  // along the orientation direction
  double semi_axis_b = 1.0;
  double orientation = 0.0;  // radians
};

// Semi-axes are drawn uniformly from [min_axis_fraction*d, max_axis_fraction*d].
struct EllipseSampling {
  double min_axis_fraction = 0.03;
  double max_axis_fraction = 0.6;
  // Centre drawn uniformly from [center_margin*d, (1-center_margin)*d] per axis.
  double center_margin = 0.0;
};

struct CorruptionConfig {
  int min_thickness = 2;
  int max_thickness = 8;
  double noise_sigma = 0.2;

  // Thickness range [2, max(3, d/8)].
  static CorruptionConfig defaults_for(int side);
  void validate(int side) const;
};

struct MaskPair {
  Image corrupted;  // values in [0,1]
  Mask clean;       // values in {0,1}
};

struct CleanMask {
  Mask mask;
  Ellipse ellipse;
  int attempts = 1;
};

Ellipse draw_ellipse(int side, Rng& rng, const EllipseSampling& sampling = {});

// Pixel (r,c) is inside when its centre (r+0.5, c+0.5) satisfies the
// ellipse inequality.
Mask rasterize_ellipse(int side, const Ellipse& ellipse);

// Coarse elastic warp: 4×4 control displacements uniform in ±max_shift,
// bilinear field, nearest-neighbour resampling, re-binarised at 0.5.
Mask elastic_distort(const Mask& mask, Rng& rng, double max_shift);

// Keeps the largest 4-connected foreground component.
Mask largest_component(const Mask& mask);

// Erosion with a (2t+1)×(2t+1) square; the window is clipped at the image
// border, so the border itself does not erode the mask.
Mask erode_square(const Mask& mask, int t);

// Rasterised (optionally distorted) random ellipse; redraws empty results,
// giving up after 100 attempts.
CleanMask sample_clean_mask(int side, Rng& rng, bool distort,
                            const EllipseSampling& sampling = {});

// Core removal: keep the inner contour band of random thickness, add
// Gaussian noise, clamp to [0,1].
Image corrupt_mask(const Mask& mask, const CorruptionConfig& config, Rng& rng);
// Deterministic core removal with a fixed thickness (no noise).
Mask inner_ring(const Mask& mask, int thickness);

// n independent pairs; pair i uses a substream of seed, so the set is
// reproducible and can be generated in any order.
std::vector<MaskPair> sample_pair_set(int n, int side, const CorruptionConfig& config,
                                      std::uint64_t seed);

}  // namespace selfmentor
