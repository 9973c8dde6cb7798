#include "selfmentor/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>

#include "selfmentor/errors.hpp"

namespace selfmentor {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Probabilities are kept inside the open interval so log() stays finite.
constexpr float kProbFloor = 5.9604645e-8f;        // 2^-24
constexpr float kProbCeil = 1.0f - 5.9604645e-8f;  // largest float below 1

void require_rank(const Tensor& t, int rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + " must have rank " + std::to_string(rank) +
                     ", got " + shape_to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) +
                     " vs " + shape_to_string(b.shape()));
  }
}

struct ConvGeometry {
  int channels, height, width, kernel, pad;
  int plane() const { return height * width; }
  int rows() const { return channels * kernel * kernel; }
};

void im2col(const float* in, const ConvGeometry& g, float* col) {
  const int hw = g.plane();
  for (int c = 0; c < g.channels; ++c) {
    const float* plane = in + static_cast<std::ptrdiff_t>(c) * hw;
    for (int ky = 0; ky < g.kernel; ++ky) {
      const int dy = ky - g.pad;
      for (int kx = 0; kx < g.kernel; ++kx) {
        const int dx = kx - g.pad;
        float* dst = col + static_cast<std::ptrdiff_t>((c * g.kernel + ky) * g.kernel + kx) * hw;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(g.width, g.width - dx);
        for (int y = 0; y < g.height; ++y) {
          float* d = dst + y * g.width;
          const int sy = y + dy;
          if (sy < 0 || sy >= g.height || x0 >= x1) {
            std::fill(d, d + g.width, 0.0f);
            continue;
          }
          std::fill(d, d + x0, 0.0f);
          std::memcpy(d + x0, plane + sy * g.width + x0 + dx,
                      sizeof(float) * static_cast<std::size_t>(x1 - x0));
          std::fill(d + x1, d + g.width, 0.0f);
        }
      }
    }
  }
}

void col2im_accumulate(const float* col, const ConvGeometry& g, float* out) {
  const int hw = g.plane();
  for (int c = 0; c < g.channels; ++c) {
    float* plane = out + static_cast<std::ptrdiff_t>(c) * hw;
    for (int ky = 0; ky < g.kernel; ++ky) {
      const int dy = ky - g.pad;
      for (int kx = 0; kx < g.kernel; ++kx) {
        const int dx = kx - g.pad;
        const float* src =
            col + static_cast<std::ptrdiff_t>((c * g.kernel + ky) * g.kernel + kx) * hw;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(g.width, g.width - dx);
        for (int y = 0; y < g.height; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= g.height) continue;
          const float* s = src + y * g.width;
          float* d = plane + sy * g.width + dx;
          for (int x = x0; x < x1; ++x) d[x] += s[x];
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d_same(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_rank(input, 4, "conv2d input");
  require_rank(weights, 4, "conv2d weights");
  require_rank(bias, 1, "conv2d bias");
  const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int o = weights.dim(0), k = weights.dim(2);
  if (weights.dim(1) != c) {
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(c) +
                     " channels, weights expect " + std::to_string(weights.dim(1)));
  }
  if (weights.dim(3) != k || k % 2 == 0) {
    throw ShapeError("conv2d kernel must be square with odd size, got " +
                     shape_to_string(weights.shape()));
  }
  if (bias.dim(0) != o) {
    throw ShapeError("conv2d bias has " + std::to_string(bias.dim(0)) + " entries, expected " +
                     std::to_string(o));
  }

  const ConvGeometry g{c, h, w, k, k / 2};
  const int hw = g.plane();
  const int rows = g.rows();
  const bool pointwise = (k == 1);

  FloatBuffer out(static_cast<std::size_t>(n) * o * hw);
  FloatBuffer col(pointwise ? 0 : static_cast<std::size_t>(rows) * hw);
  ConstMatrixMap wmat(weights.values().data(), o, rows);
  const float* bptr = bias.values().data();
  for (int s = 0; s < n; ++s) {
    const float* in = input.values().data() + static_cast<std::ptrdiff_t>(s) * c * hw;
    const float* colptr = in;
    if (!pointwise) {
      im2col(in, g, col.data());
      colptr = col.data();
    }
    MatrixMap omat(out.data() + static_cast<std::ptrdiff_t>(s) * o * hw, o, hw);
    omat.noalias() = wmat * ConstMatrixMap(colptr, rows, hw);
    for (int oc = 0; oc < o; ++oc) omat.row(oc).array() += bptr[oc];
  }

  return make_result(
      Shape{n, o, h, w}, std::move(out), {input, weights, bias},
      [n, c, o, g, hw, rows, pointwise](detail::Node& self) {
        detail::Node& in_node = *self.parents[0];
        detail::Node& w_node = *self.parents[1];
        detail::Node& b_node = *self.parents[2];
        ConstMatrixMap wmat(w_node.value.data(), o, rows);
        FloatBuffer col(pointwise ? 0 : static_cast<std::size_t>(rows) * hw);
        FloatBuffer dcol(pointwise ? 0 : static_cast<std::size_t>(rows) * hw);
        for (int s = 0; s < n; ++s) {
          ConstMatrixMap dout(self.grad.data() + static_cast<std::ptrdiff_t>(s) * o * hw, o, hw);
          const float* in = in_node.value.data() + static_cast<std::ptrdiff_t>(s) * c * hw;
          if (w_node.track_grad) {
            const float* colptr = in;
            if (!pointwise) {
              im2col(in, g, col.data());
              colptr = col.data();
            }
            MatrixMap dw(w_node.ensure_grad().data(), o, rows);
            dw.noalias() += dout * ConstMatrixMap(colptr, rows, hw).transpose();
          }
          if (b_node.track_grad) {
            auto& db = b_node.ensure_grad();
            for (int oc = 0; oc < o; ++oc) db[static_cast<std::size_t>(oc)] += dout.row(oc).sum();
          }
          if (in_node.track_grad) {
            float* din = in_node.ensure_grad().data() + static_cast<std::ptrdiff_t>(s) * c * hw;
            if (pointwise) {
              MatrixMap(din, rows, hw).noalias() += wmat.transpose() * dout;
            } else {
              MatrixMap(dcol.data(), rows, hw).noalias() = wmat.transpose() * dout;
              col2im_accumulate(dcol.data(), g, din);
            }
          }
        }
      });
}

Tensor maxpool4(const Tensor& input) {
  constexpr int kPool = 4;
  require_rank(input, 4, "maxpool4 input");
  const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h % kPool != 0 || w % kPool != 0) {
    throw ShapeError("maxpool4 requires height and width divisible by 4, got " +
                     shape_to_string(input.shape()));
  }
  const int oh = h / kPool, ow = w / kPool;
  const std::size_t planes = static_cast<std::size_t>(n) * c;
  FloatBuffer out(planes * oh * ow);
  std::vector<int> argmax(out.size());
  auto in = input.values();
  for (std::size_t p = 0; p < planes; ++p) {
    const float* plane = in.data() + p * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        int best = (oy * kPool) * w + ox * kPool;
        float best_value = plane[best];
        for (int dy = 0; dy < kPool; ++dy) {
          for (int dx = 0; dx < kPool; ++dx) {
            const int idx = (oy * kPool + dy) * w + ox * kPool + dx;
            if (plane[idx] > best_value) {
              best_value = plane[idx];
              best = idx;
            }
          }
        }
        const std::size_t o = p * oh * ow + static_cast<std::size_t>(oy * ow + ox);
        out[o] = best_value;
        argmax[o] = best;
      }
    }
  }
  return make_result(Shape{n, c, oh, ow}, std::move(out), {input},
                     [argmax = std::move(argmax), planes, h, w, oh, ow](detail::Node& self) {
                       detail::Node& in_node = *self.parents[0];
                       if (!in_node.track_grad) return;
                       auto& din = in_node.ensure_grad();
                       const std::size_t per_out = static_cast<std::size_t>(oh) * ow;
                       const std::size_t per_in = static_cast<std::size_t>(h) * w;
                       for (std::size_t p = 0; p < planes; ++p) {
                         for (std::size_t i = 0; i < per_out; ++i) {
                           const std::size_t o = p * per_out + i;
                           din[p * per_in + static_cast<std::size_t>(argmax[o])] += self.grad[o];
                         }
                       }
                     });
}

Tensor upsample_nearest4(const Tensor& input) {
  constexpr int kFactor = 4;
  require_rank(input, 4, "upsample_nearest4 input");
  const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int oh = h * kFactor, ow = w * kFactor;
  const std::size_t planes = static_cast<std::size_t>(n) * c;
  FloatBuffer out(planes * oh * ow);
  auto in = input.values();
  for (std::size_t p = 0; p < planes; ++p) {
    const float* src = in.data() + p * h * w;
    float* dst = out.data() + p * oh * ow;
    for (int y = 0; y < oh; ++y) {
      const float* srow = src + (y / kFactor) * w;
      float* drow = dst + y * ow;
      for (int x = 0; x < ow; ++x) drow[x] = srow[x / kFactor];
    }
  }
  return make_result(Shape{n, c, oh, ow}, std::move(out), {input},
                     [planes, h, w, oh, ow](detail::Node& self) {
                       detail::Node& in_node = *self.parents[0];
                       if (!in_node.track_grad) return;
                       auto& din = in_node.ensure_grad();
                       for (std::size_t p = 0; p < planes; ++p) {
                         const float* g = self.grad.data() + p * oh * ow;
                         float* d = din.data() + p * h * w;
                         for (int y = 0; y < oh; ++y) {
                           float* drow = d + (y / kFactor) * w;
                           const float* grow = g + y * ow;
                           for (int x = 0; x < ow; ++x) drow[x / kFactor] += grow[x];
                         }
                       }
                     });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 4, "concat_channels first argument");
  require_rank(b, 4, "concat_channels second argument");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw ShapeError("concat_channels batch/spatial mismatch: " + shape_to_string(a.shape()) +
                     " vs " + shape_to_string(b.shape()));
  }
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1), h = a.dim(2), w = a.dim(3);
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  const std::size_t sa = ca * hw, sb = cb * hw;
  FloatBuffer out(static_cast<std::size_t>(n) * (sa + sb));
  for (int s = 0; s < n; ++s) {
    float* dst = out.data() + s * (sa + sb);
    std::copy_n(a.values().data() + s * sa, sa, dst);
    std::copy_n(b.values().data() + s * sb, sb, dst + sa);
  }
  return make_result(Shape{n, ca + cb, h, w}, std::move(out), {a, b},
                     [n, sa, sb](detail::Node& self) {
                       detail::Node& an = *self.parents[0];
                       detail::Node& bn = *self.parents[1];
                       for (int s = 0; s < n; ++s) {
                         const float* g = self.grad.data() + s * (sa + sb);
                         if (an.track_grad) {
                           float* d = an.ensure_grad().data() + s * sa;
                           for (std::size_t i = 0; i < sa; ++i) d[i] += g[i];
                         }
                         if (bn.track_grad) {
                           float* d = bn.ensure_grad().data() + s * sb;
                           for (std::size_t i = 0; i < sb; ++i) d[i] += g[sa + i];
                         }
                       }
                     });
}

Tensor activation(const Tensor& input, Activation kind) {
  auto in = input.values();
  FloatBuffer out(in.size());
  if (kind == Activation::relu) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0f ? in[i] : 0.0f;
    return make_result(input.shape(), std::move(out), {input}, [](detail::Node& self) {
      detail::Node& in_node = *self.parents[0];
      if (!in_node.track_grad) return;
      auto& d = in_node.ensure_grad();
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (in_node.value[i] > 0.0f) d[i] += self.grad[i];
      }
    });
  }
  for (std::size_t i = 0; i < in.size(); ++i) {
    const float s = 1.0f / (1.0f + std::exp(-in[i]));
    out[i] = std::clamp(s, kProbFloor, kProbCeil);
  }
  return make_result(input.shape(), std::move(out), {input}, [](detail::Node& self) {
    detail::Node& in_node = *self.parents[0];
    if (!in_node.track_grad) return;
    auto& d = in_node.ensure_grad();
    for (std::size_t i = 0; i < d.size(); ++i) {
      const float s = self.value[i];
      d[i] += self.grad[i] * s * (1.0f - s);
    }
  });
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "mse") return LossKind::mse;
  if (name == "bce") return LossKind::bce;
  if (name == "dice") return LossKind::dice;
  throw std::invalid_argument("unknown loss kind '" + std::string(name) +
                              "' (expected mse, bce or dice)");
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::mse: return "mse";
    case LossKind::bce: return "bce";
    case LossKind::dice: return "dice";
  }
  return "?";
}

Tensor loss(const Tensor& pred, const Tensor& target, LossKind kind) {
  require_same_shape(pred, target, "loss");
  auto p = pred.values();
  auto t = target.values();
  const std::size_t count = p.size();

  switch (kind) {
    case LossKind::mse: {
      double sum = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        const double diff = static_cast<double>(p[i]) - t[i];
        sum += diff * diff;
      }
      return make_result(Shape{1}, {static_cast<float>(sum)}, {pred, target},
                         [](detail::Node& self) {
                           detail::Node& pn = *self.parents[0];
                           detail::Node& tn = *self.parents[1];
                           const float g = self.grad[0];
                           if (pn.track_grad) {
                             auto& d = pn.ensure_grad();
                             for (std::size_t i = 0; i < d.size(); ++i)
                               d[i] += 2.0f * g * (pn.value[i] - tn.value[i]);
                           }
                           if (tn.track_grad) {
                             auto& d = tn.ensure_grad();
                             for (std::size_t i = 0; i < d.size(); ++i)
                               d[i] -= 2.0f * g * (pn.value[i] - tn.value[i]);
                           }
                         });
    }
    case LossKind::bce: {
      double sum = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        if (!(p[i] > 0.0f && p[i] < 1.0f)) {
          throw DomainError("bce prediction must lie strictly inside (0,1), got " +
                            std::to_string(p[i]));
        }
        if (!(t[i] >= 0.0f && t[i] <= 1.0f)) {
          throw DomainError("bce target must lie in [0,1], got " + std::to_string(t[i]));
        }
        const double pi = p[i];
        sum -= t[i] * std::log(pi) + (1.0 - t[i]) * std::log1p(-pi);
      }
      const double inv = count ? 1.0 / static_cast<double>(count) : 0.0;
      return make_result(
          Shape{1}, {static_cast<float>(sum * inv)}, {pred, target},
          [inv](detail::Node& self) {
            detail::Node& pn = *self.parents[0];
            detail::Node& tn = *self.parents[1];
            const double g = self.grad[0] * inv;
            if (pn.track_grad) {
              auto& d = pn.ensure_grad();
              for (std::size_t i = 0; i < d.size(); ++i) {
                const double pi = pn.value[i];
                d[i] += static_cast<float>(g * (pi - tn.value[i]) / (pi * (1.0 - pi)));
              }
            }
            if (tn.track_grad) {
              auto& d = tn.ensure_grad();
              for (std::size_t i = 0; i < d.size(); ++i) {
                const double pi = pn.value[i];
                d[i] -= static_cast<float>(g * (std::log(pi) - std::log1p(-pi)));
              }
            }
          });
    }
    case LossKind::dice: {
      double inter = 0.0, total = kDiceEpsilon;
      for (std::size_t i = 0; i < count; ++i) {
        inter += static_cast<double>(p[i]) * t[i];
        total += static_cast<double>(p[i]) + t[i];
      }
      return make_result(Shape{1}, {static_cast<float>(1.0 - 2.0 * inter / total)},
                         {pred, target}, [inter, total](detail::Node& self) {
                           detail::Node& pn = *self.parents[0];
                           detail::Node& tn = *self.parents[1];
                           const double g = self.grad[0];
                           const double denom = total * total;
                           if (pn.track_grad) {
                             auto& d = pn.ensure_grad();
                             for (std::size_t i = 0; i < d.size(); ++i)
                               d[i] += static_cast<float>(
                                   -2.0 * g * (tn.value[i] * total - inter) / denom);
                           }
                           if (tn.track_grad) {
                             auto& d = tn.ensure_grad();
                             for (std::size_t i = 0; i < d.size(); ++i)
                               d[i] += static_cast<float>(
                                   -2.0 * g * (pn.value[i] * total - inter) / denom);
                           }
                         });
    }
  }
  throw ContractError("unhandled loss kind");
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  FloatBuffer out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (int k = 0; k < 2; ++k) {
      detail::Node& pn = *self.parents[static_cast<std::size_t>(k)];
      if (!pn.track_grad) continue;
      auto& d = pn.ensure_grad();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
    }
  });
}

Tensor scale(const Tensor& a, float factor) {
  FloatBuffer out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * factor;
  return make_result(a.shape(), std::move(out), {a}, [factor](detail::Node& self) {
    detail::Node& pn = *self.parents[0];
    if (!pn.track_grad) return;
    auto& d = pn.ensure_grad();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * self.grad[i];
  });
}

double l1_norm(std::span<const float> values) {
  double sum = 0.0;
  for (float v : values) sum += std::fabs(static_cast<double>(v));
  return sum;
}

double l1_norm(const Tensor& t) { return l1_norm(t.values()); }

}  // namespace selfmentor
