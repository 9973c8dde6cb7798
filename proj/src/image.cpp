#include "selfmentor/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "selfmentor/errors.hpp"
#include "selfmentor/io.hpp"

namespace selfmentor {

Image::Image(int h, int w, float fill)
    : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

Image::Image(int h, int w, std::vector<float> values)
    : height(h), width(w), pixels(std::move(values)) {
  if (pixels.size() != static_cast<std::size_t>(h) * w) {
    throw ShapeError("image of " + std::to_string(h) + "x" + std::to_string(w) + " given " +
                     std::to_string(pixels.size()) + " pixels");
  }
}

Tensor to_tensor(const Image& image) {
  return Tensor(Shape{1, 1, image.height, image.width}, image.pixels);
}

Tensor to_tensor(const std::vector<Image>& images) {
  if (images.empty()) throw ShapeError("cannot stack an empty image list");
  std::vector<float> values;
  values.reserve(images.size() * images.front().size());
  for (const Image& im : images) {
    if (!im.same_size(images.front())) throw ShapeError("cannot stack images of different sizes");
    values.insert(values.end(), im.pixels.begin(), im.pixels.end());
  }
  return Tensor(Shape{static_cast<int>(images.size()), 1, images.front().height,
                      images.front().width},
                std::move(values));
}

Image to_image(const Tensor& tensor) {
  if (tensor.rank() != 4) {
    throw ShapeError("to_image expects N×C×H×W, got " + shape_to_string(tensor.shape()));
  }
  const int h = tensor.dim(2), w = tensor.dim(3);
  auto v = tensor.values();
  return Image(h, w, std::vector<float>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h) * w));
}

Mask threshold(const Image& image, float thr) {
  Mask out(image.height, image.width);
  for (std::size_t i = 0; i < image.size(); ++i) out.pixels[i] = image.pixels[i] >= thr ? 1.0f : 0.0f;
  return out;
}

bool is_binary(const Image& image) {
  return std::all_of(image.pixels.begin(), image.pixels.end(),
                     [](float v) { return v == 0.0f || v == 1.0f; });
}

double pixel_sum(const Image& image) {
  double s = 0.0;
  for (float v : image.pixels) s += v;
  return s;
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
  std::string bytes = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                      "\n255\n";
  const std::size_t header = bytes.size();
  bytes.resize(header + image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const float v = std::clamp(image.pixels[i], 0.0f, 1.0f);
    bytes[header + i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f)));
  }
  write_file_atomic(path, bytes);
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image " + path.string());
  const std::string magic = next_token(in);
  if (magic != "P5" && magic != "P2") {
    throw std::runtime_error(path.string() + ": not a PGM file (magic '" + magic + "')");
  }
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token(in));
    height = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw std::runtime_error(path.string() + ": malformed PGM header");
  }
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
    throw std::runtime_error(path.string() + ": unsupported PGM geometry or maxval");
  }
  Image image(height, width);
  if (magic == "P5") {
    std::string raw(image.size(), '\0');
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw std::runtime_error(path.string() + ": truncated pixel data");
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      image.pixels[i] = static_cast<float>(static_cast<unsigned char>(raw[i])) / maxval;
    }
  } else {
    for (auto& px : image.pixels) {
      int v;
      if (!(in >> v)) throw std::runtime_error(path.string() + ": truncated pixel data");
      px = static_cast<float>(v) / maxval;
    }
  }
  return image;
}

}  // namespace selfmentor
