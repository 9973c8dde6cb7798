// Straight-line double-precision re-implementations used as test oracles.
// They share no code with the library.
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "selfmentor/tensor.hpp"
#include "selfmentor/unet.hpp"

namespace reference {

struct Array {
  std::vector<int> shape;  // N, C, H, W
  std::vector<double> v;

  Array() = default;
  Array(std::vector<int> s, double fill = 0.0) : shape(std::move(s)) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    v.assign(n, fill);
  }
  double& at(int n, int c, int h, int w) {
    return v[((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }
  double at(int n, int c, int h, int w) const {
    return v[((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }
};

inline Array from_tensor(const selfmentor::Tensor& t) {
  Array a;
  a.shape = t.shape();
  for (float x : t.values()) a.v.push_back(x);
  return a;
}

inline Array conv(const Array& x, const Array& w, const Array& b) {
  const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  const int O = w.shape[0], k = w.shape[2], r = k / 2;
  Array y({N, O, H, W});
  for (int n = 0; n < N; ++n)
    for (int o = 0; o < O; ++o)
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
          double s = b.v[static_cast<std::size_t>(o)];
          for (int c = 0; c < C; ++c)
            for (int di = 0; di < k; ++di)
              for (int dj = 0; dj < k; ++dj) {
                const int ii = i + di - r, jj = j + dj - r;
                if (ii < 0 || ii >= H || jj < 0 || jj >= W) continue;
                s += w.at(o, c, di, dj) * x.at(n, c, ii, jj);
              }
          y.at(n, o, i, j) = s;
        }
  return y;
}

// Which relu units are active and which element wins each pooling window.
using Pattern = std::vector<int>;

inline Array maxpool4(const Array& x, Pattern* pattern = nullptr) {
  Array y({x.shape[0], x.shape[1], x.shape[2] / 4, x.shape[3] / 4});
  for (int n = 0; n < y.shape[0]; ++n)
    for (int c = 0; c < y.shape[1]; ++c)
      for (int i = 0; i < y.shape[2]; ++i)
        for (int j = 0; j < y.shape[3]; ++j) {
          double m = -INFINITY;
          int arg = 0;
          for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
              if (x.at(n, c, 4 * i + a, 4 * j + b) > m) {
                m = x.at(n, c, 4 * i + a, 4 * j + b);
                arg = 4 * a + b;
              }
          y.at(n, c, i, j) = m;
          if (pattern) pattern->push_back(arg);
        }
  return y;
}

inline Array upsample4(const Array& x) {
  Array y({x.shape[0], x.shape[1], x.shape[2] * 4, x.shape[3] * 4});
  for (int n = 0; n < y.shape[0]; ++n)
    for (int c = 0; c < y.shape[1]; ++c)
      for (int i = 0; i < y.shape[2]; ++i)
        for (int j = 0; j < y.shape[3]; ++j) y.at(n, c, i, j) = x.at(n, c, i / 4, j / 4);
  return y;
}

inline Array concat(const Array& a, const Array& b) {
  Array y({a.shape[0], a.shape[1] + b.shape[1], a.shape[2], a.shape[3]});
  for (int n = 0; n < y.shape[0]; ++n)
    for (int c = 0; c < y.shape[1]; ++c)
      for (int i = 0; i < y.shape[2]; ++i)
        for (int j = 0; j < y.shape[3]; ++j)
          y.at(n, c, i, j) = c < a.shape[1] ? a.at(n, c, i, j) : b.at(n, c - a.shape[1], i, j);
  return y;
}

inline Array relu(Array x, Pattern* pattern = nullptr) {
  for (double& v : x.v) {
    if (pattern) pattern->push_back(v > 0);
    v = v > 0 ? v : 0;
  }
  return x;
}

inline Array sigmoid(Array x) {
  for (double& v : x.v) v = 1.0 / (1.0 + std::exp(-v));
  return x;
}

inline double mse(const Array& p, const Array& t) {
  double s = 0;
  for (std::size_t i = 0; i < p.v.size(); ++i) s += (p.v[i] - t.v[i]) * (p.v[i] - t.v[i]);
  return s;
}

inline double bce(const Array& p, const Array& t) {
  double s = 0;
  for (std::size_t i = 0; i < p.v.size(); ++i)
    s -= t.v[i] * std::log(p.v[i]) + (1 - t.v[i]) * std::log(1 - p.v[i]);
  return s / static_cast<double>(p.v.size());
}

inline double dice(const Array& p, const Array& t) {
  double inter = 0, total = 1e-7;
  for (std::size_t i = 0; i < p.v.size(); ++i) {
    inter += p.v[i] * t.v[i];
    total += p.v[i] + t.v[i];
  }
  return 1 - 2 * inter / total;
}

// The U-net by parameter name, evaluated with plain loops.
struct UNetParams {
  selfmentor::UNetConfig config;
  std::vector<std::string> names;
  std::vector<Array> values;

  explicit UNetParams(const selfmentor::UNet& net) : config(net.config()) {
    for (const auto& p : net.parameters()) {
      names.push_back(p.name);
      values.push_back(from_tensor(p.value));
    }
  }
  const Array& get(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return values[i];
    throw std::runtime_error("no parameter " + name);
  }
  Array block(const std::string& prefix, Array h, Pattern* pattern) const {
    for (int j = 0; j < config.convs_per_block; ++j) {
      const std::string p = prefix + ".conv" + std::to_string(j);
      h = relu(conv(h, get(p + ".weight"), get(p + ".bias")), pattern);
    }
    return h;
  }
  Array forward(const Array& x, Pattern* pattern = nullptr) const {
    std::vector<Array> skips;
    Array h = x;
    for (int i = 0; i < config.depth; ++i) {
      h = block("enc" + std::to_string(i), h, pattern);
      skips.push_back(h);
      h = maxpool4(h, pattern);
    }
    h = block("bottleneck", h, pattern);
    for (int i = config.depth - 1; i >= 0; --i) {
      h = block("dec" + std::to_string(i), concat(upsample4(h), skips[static_cast<std::size_t>(i)]),
                pattern);
    }
    return sigmoid(conv(h, get("head.weight"), get("head.bias")));
  }
};

// Central differences of f around x (in place, restored afterwards).
inline std::vector<double> finite_difference(std::vector<double>& x,
                                             const std::function<double()>& f, double h = 1e-3) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f();
    x[i] = keep - h;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||, tiny).
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
  return std::sqrt(diff) / denom;
}

inline std::vector<double> to_double(std::span<const float> v) { return {v.begin(), v.end()}; }

}  // namespace reference
