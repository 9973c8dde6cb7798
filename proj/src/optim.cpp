#include "selfmentor/optim.hpp"

#include <cmath>

#include "selfmentor/errors.hpp"

namespace selfmentor {

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ContractError("learning_rate must be >= 0");
  if (!(discount > 0.0 && discount < 1.0)) throw ContractError("discount must lie in (0,1)");
  if (!(epsilon > 0.0)) throw ContractError("epsilon must be > 0");
}

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)), value(std::move(value_)), rms_accumulator(value.numel(), 0.0f) {}

void rmsprop_step(std::span<Parameter> params, const OptimizerConfig& config) {
  config.validate();
  const double rho = config.discount;
  for (Parameter& p : params) {
    if (!p.value.has_grad()) continue;
    auto values = p.value.values();
    auto grad = p.value.mutable_grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      const double acc = rho * p.rms_accumulator[i] + (1.0 - rho) * g * g;
      p.rms_accumulator[i] = static_cast<float>(acc);
      values[i] = static_cast<float>(values[i] -
                                     config.learning_rate * g / std::sqrt(acc + config.epsilon));
      grad[i] = 0.0f;
    }
  }
}

}  // namespace selfmentor
