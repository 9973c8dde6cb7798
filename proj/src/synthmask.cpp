#include "selfmentor/synthmask.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "selfmentor/errors.hpp"

namespace selfmentor {

CorruptionConfig CorruptionConfig::defaults_for(int side) {
  CorruptionConfig c;
  c.min_thickness = 2;
  c.max_thickness = std::max(3, side / 8);
  return c;
}

void CorruptionConfig::validate(int side) const {
  if (min_thickness <= 0 || min_thickness > max_thickness || 2 * max_thickness > side) {
    throw ContractError("contour thickness range must satisfy 0 < t_min <= t_max <= d/2");
  }
  if (!(noise_sigma >= 0.0)) throw ContractError("noise_sigma must be >= 0");
}

Ellipse draw_ellipse(int side, Rng& rng, const EllipseSampling& s) {
  const double d = side;
  Ellipse e;
  e.center_row = uniform(rng, s.center_margin * d, (1.0 - s.center_margin) * d);
  e.center_col = uniform(rng, s.center_margin * d, (1.0 - s.center_margin) * d);
  e.orientation = uniform(rng, 0.0, std::numbers::pi);
  e.semi_axis_a = uniform(rng, s.min_axis_fraction * d, s.max_axis_fraction * d);
  e.semi_axis_b = uniform(rng, s.min_axis_fraction * d, s.max_axis_fraction * d);
  return e;
}

Mask rasterize_ellipse(int side, const Ellipse& e) {
  Mask m(side, side);
  const double ca = std::cos(e.orientation), sa = std::sin(e.orientation);
  const double ia = 1.0 / (e.semi_axis_a * e.semi_axis_a);
  const double ib = 1.0 / (e.semi_axis_b * e.semi_axis_b);
  for (int r = 0; r < side; ++r) {
    const double dy = r + 0.5 - e.center_row;
    for (int c = 0; c < side; ++c) {
      const double dx = c + 0.5 - e.center_col;
      const double u = dx * ca + dy * sa;
      const double v = -dx * sa + dy * ca;
      if (u * u * ia + v * v * ib <= 1.0) m.at(r, c) = 1.0f;
    }
  }
  return m;
}

Mask elastic_distort(const Mask& mask, Rng& rng, double max_shift) {
  constexpr int kGrid = 4;
  std::array<double, kGrid * kGrid> shift_row{}, shift_col{};
  for (int i = 0; i < kGrid * kGrid; ++i) {
    shift_row[static_cast<std::size_t>(i)] = uniform(rng, -max_shift, max_shift);
    shift_col[static_cast<std::size_t>(i)] = uniform(rng, -max_shift, max_shift);
  }
  const int h = mask.height, w = mask.width;
  const double step_r = (h - 1) / double(kGrid - 1);
  const double step_c = (w - 1) / double(kGrid - 1);
  auto lerp_field = [&](const std::array<double, kGrid * kGrid>& f, double gr, double gc) {
    const int r0 = std::min(static_cast<int>(gr), kGrid - 2);
    const int c0 = std::min(static_cast<int>(gc), kGrid - 2);
    const double fr = gr - r0, fc = gc - c0;
    auto at = [&](int r, int c) { return f[static_cast<std::size_t>(r * kGrid + c)]; };
    return (1 - fr) * ((1 - fc) * at(r0, c0) + fc * at(r0, c0 + 1)) +
           fr * ((1 - fc) * at(r0 + 1, c0) + fc * at(r0 + 1, c0 + 1));
  };
  Mask out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double gr = r / step_r, gc = c / step_c;
      const long sr = std::lround(r + lerp_field(shift_row, gr, gc));
      const long sc = std::lround(c + lerp_field(shift_col, gr, gc));
      float v = 0.0f;
      if (sr >= 0 && sr < h && sc >= 0 && sc < w) v = mask.at(static_cast<int>(sr), static_cast<int>(sc));
      out.at(r, c) = v >= 0.5f ? 1.0f : 0.0f;
    }
  }
  return out;
}

Mask largest_component(const Mask& mask) {
  const int h = mask.height, w = mask.width;
  std::vector<int> label(mask.size(), 0);
  std::vector<int> sizes{0};
  std::vector<int> queue;
  for (int start = 0; start < static_cast<int>(mask.size()); ++start) {
    if (mask.pixels[static_cast<std::size_t>(start)] < 0.5f || label[static_cast<std::size_t>(start)]) continue;
    const int id = static_cast<int>(sizes.size());
    sizes.push_back(0);
    queue.assign(1, start);
    label[static_cast<std::size_t>(start)] = id;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const int p = queue[qi];
      ++sizes.back();
      const int r = p / w, c = p % w;
      const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[0] >= h || n[1] < 0 || n[1] >= w) continue;
        const int q = n[0] * w + n[1];
        if (mask.pixels[static_cast<std::size_t>(q)] >= 0.5f && !label[static_cast<std::size_t>(q)]) {
          label[static_cast<std::size_t>(q)] = id;
          queue.push_back(q);
        }
      }
    }
  }
  Mask out(h, w);
  if (sizes.size() == 1) return out;
  const int best = static_cast<int>(std::max_element(sizes.begin() + 1, sizes.end()) - sizes.begin());
  for (std::size_t i = 0; i < out.size(); ++i) out.pixels[i] = label[i] == best ? 1.0f : 0.0f;
  return out;
}

Mask erode_square(const Mask& mask, int t) {
  if (t < 0) throw ContractError("erosion radius must be >= 0");
  const int h = mask.height, w = mask.width;
  // Separable min filter via counts of background pixels in each window.
  auto pass = [t](const std::vector<float>& in, int lines, int length, int line_stride,
                  int elem_stride) {
    std::vector<float> out(in.size());
    std::vector<int> zeros(static_cast<std::size_t>(length) + 1);
    for (int l = 0; l < lines; ++l) {
      const int base = l * line_stride;
      for (int i = 0; i < length; ++i) {
        zeros[static_cast<std::size_t>(i) + 1] =
            zeros[static_cast<std::size_t>(i)] + (in[static_cast<std::size_t>(base + i * elem_stride)] < 0.5f);
      }
      for (int i = 0; i < length; ++i) {
        const int lo = std::max(0, i - t), hi = std::min(length - 1, i + t);
        const int count = zeros[static_cast<std::size_t>(hi) + 1] - zeros[static_cast<std::size_t>(lo)];
        out[static_cast<std::size_t>(base + i * elem_stride)] = count == 0 ? 1.0f : 0.0f;
      }
    }
    return out;
  };
  std::vector<float> rows = pass(mask.pixels, h, w, w, 1);
  return Mask(h, w, pass(rows, w, h, 1, w));
}

CleanMask sample_clean_mask(int side, Rng& rng, bool distort, const EllipseSampling& sampling) {
  if (side < 16) throw ContractError("synthetic masks need a side of at least 16 pixels");
  constexpr int kMaxAttempts = 100;
  for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    CleanMask result;
    result.ellipse = draw_ellipse(side, rng, sampling);
    result.mask = rasterize_ellipse(side, result.ellipse);
    if (distort) {
      result.mask = largest_component(elastic_distort(result.mask, rng, side / 32.0));
    }
    result.attempts = attempt;
    if (pixel_sum(result.mask) > 0.0) return result;
  }
  throw std::runtime_error("could not draw a non-empty synthetic mask in 100 attempts");
}

Mask inner_ring(const Mask& mask, int thickness) {
  Mask eroded = erode_square(mask, thickness);
  Mask ring(mask.height, mask.width);
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const float m = mask.pixels[i] >= 0.5f ? 1.0f : 0.0f;
    ring.pixels[i] = m * (m - eroded.pixels[i]);
  }
  return ring;
}

Image corrupt_mask(const Mask& mask, const CorruptionConfig& config, Rng& rng) {
  config.validate(std::min(mask.height, mask.width));
  const int t = uniform_int(rng, config.min_thickness, config.max_thickness);
  Image out = inner_ring(mask, t);
  if (config.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, config.noise_sigma);
    for (float& v : out.pixels) {
      v = static_cast<float>(std::clamp(v + noise(rng), 0.0, 1.0));
    }
  }
  return out;
}

std::vector<MaskPair> sample_pair_set(int n, int side, const CorruptionConfig& config,
                                      std::uint64_t seed) {
  if (n < 1) throw ContractError("pair set size must be >= 1");
  config.validate(side);
  std::vector<MaskPair> pairs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    CleanMask clean = sample_clean_mask(side, rng, true);
    pairs[static_cast<std::size_t>(i)].corrupted = corrupt_mask(clean.mask, config, rng);
    pairs[static_cast<std::size_t>(i)].clean = std::move(clean.mask);
  }
  return pairs;
}

}  // namespace selfmentor
