#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ppu/tensor.hpp"

namespace ppu::tensor {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t elements_checked = 0;
  // Elements whose first central difference disagreed and were re-measured
  // with a much smaller step (a ReLU or max-pool switch inside the first step).
  std::size_t refined = 0;
  std::string worst;  // "leaf[i]" of the largest error
};

// Compares backward() gradients of the scalar returned by `build` against
// central finite differences on every element of every leaf. `build` must
// rebuild the graph from the current leaf values on each call.
//
// Relative error per element is |a - n| / max(|a|, |n|, 1e-5).
GradCheckResult check_gradients(const std::function<Tensor()>& build, std::vector<Tensor> leaves,
                                double perturbation = 1e-3, double tolerance = 1e-3);

}  // namespace ppu::tensor
