#pragma once

#include <string_view>

#include "selfmentor/tensor.hpp"

namespace selfmentor {

// Zero-padded "same" convolution. input N×C×H×W, weights O×C×k×k with odd k,
// bias O. Output N×O×H×W.
Tensor conv2d_same(const Tensor& input, const Tensor& weights, const Tensor& bias);

// 4×4 max pooling with stride 4. Backward routes to the first maximum in
// row-major window order.
Tensor maxpool4(const Tensor& input);

// Nearest-neighbour ×4 upsampling.
Tensor upsample_nearest4(const Tensor& input);

// Concatenate along the channel axis (axis 1), a's channels first.
Tensor concat_channels(const Tensor& a, const Tensor& b);

enum class Activation { relu, sigmoid };

Tensor activation(const Tensor& input, Activation kind);
inline Tensor relu(const Tensor& input) { return activation(input, Activation::relu); }
inline Tensor sigmoid(const Tensor& input) { return activation(input, Activation::sigmoid); }

enum class LossKind { mse, bce, dice };

LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);

constexpr float kDiceEpsilon = 1e-7f;

// mse: sum of squared differences. bce: mean binary cross-entropy.
// dice: 1 - 2<p,t> / (sum p + sum t + eps). Gradients flow into both
// arguments when they track gradients.
Tensor loss(const Tensor& pred, const Tensor& target, LossKind kind);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float factor);

// Sum of absolute values; not differentiable.
double l1_norm(const Tensor& t);
double l1_norm(std::span<const float> values);

}  // namespace selfmentor
