#include "ppu/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ppu::tensor {

void adam_step(std::vector<Tensor>& params, OptimizerState& state) {
  if (state.config.learning_rate <= 0) throw std::invalid_argument("adam_step: learning rate must be positive");
  if (state.first_moment.empty()) {
    for (auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                                " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.first_moment[k].size() != params[k].size()) {
      throw std::invalid_argument("adam_step: moment shape mismatch for tensor " + std::to_string(k));
    }
    for (Real g : params[k].grad()) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw std::domain_error("adam_step: non-finite gradient in tensor " + std::to_string(k));
      }
    }
  }

  const auto& c = state.config;
  const std::uint64_t t = state.step_count + 1;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].values();
    auto grads = params[k].grad();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grads[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double mhat = m[i] / correction1;
      const double vhat = v[i] / correction2;
      values[i] = static_cast<Real>(values[i] - c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon));
    }
  }
  state.step_count = t;
}

}  // namespace ppu::tensor
