#pragma once

#include <span>
#include <string>
#include <vector>

#include "selfmentor/tensor.hpp"

namespace selfmentor {

struct OptimizerConfig {
  double learning_rate = 1e-4;
  double discount = 0.9;
  double epsilon = 1e-8;

  void validate() const;
};

// A trainable tensor with its RMSprop running average of squared gradients.
struct Parameter {
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  std::vector<float> rms_accumulator;
};

// accumulator <- discount * accumulator + (1 - discount) * g^2
// value       <- value - lr * g / sqrt(accumulator + eps)
// Gradients are zeroed afterwards. Parameters without a gradient buffer
// (frozen) are left untouched.
void rmsprop_step(std::span<Parameter> params, const OptimizerConfig& config);

}  // namespace selfmentor
