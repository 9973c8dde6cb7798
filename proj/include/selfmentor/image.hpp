#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "selfmentor/tensor.hpp"

namespace selfmentor {

// Single-channel H×W image, row-major. Masks use the same type with values
// in {0,1}.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, float fill = 0.0f);
  Image(int h, int w, std::vector<float> values);

  float& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
  float at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  std::size_t size() const { return pixels.size(); }
  bool same_size(const Image& other) const {
    return height == other.height && width == other.width;
  }

  bool operator==(const Image& other) const = default;
};

using Mask = Image;

// 1×1×H×W tensor view of an image (copies).
Tensor to_tensor(const Image& image);
// Stacks same-sized images into N×1×H×W.
Tensor to_tensor(const std::vector<Image>& images);
// First sample/channel of an N×C×H×W tensor.
Image to_image(const Tensor& tensor);

// values >= threshold become 1, others 0.
Mask threshold(const Image& image, float threshold = 0.5f);
bool is_binary(const Image& image);
double pixel_sum(const Image& image);

// 8-bit grayscale PGM (P5). Values are clamped to [0,1] and scaled by 255.
void write_pgm(const std::filesystem::path& path, const Image& image);
// Reads binary (P5) or ASCII (P2) PGM with maxval <= 255, scaled into [0,1].
Image read_pgm(const std::filesystem::path& path);

}  // namespace selfmentor
