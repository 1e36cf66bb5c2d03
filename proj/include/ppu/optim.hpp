#pragma once

#include <cstdint>
#include <vector>

#include "ppu/tensor.hpp"

namespace ppu::tensor {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  std::uint64_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// Bias-corrected Adam update of every tensor in `params` using its grad().
// Throws std::domain_error (and leaves params and state untouched) when any
// gradient is NaN or infinite.
void adam_step(std::vector<Tensor>& params, OptimizerState& state);

}  // namespace ppu::tensor
