#include "ppu/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ppu::tensor {

namespace {

double central_difference(const std::function<Tensor()>& build, Tensor& leaf, std::size_t i, double h) {
  auto values = leaf.values();
  const Real saved = values[i];
  values[i] = static_cast<Real>(saved + h);
  const double up = build().item();
  values[i] = static_cast<Real>(saved - h);
  const double down = build().item();
  values[i] = saved;
  return (up - down) / (2.0 * h);
}

double relative_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-5});
}

}  // namespace

GradCheckResult check_gradients(const std::function<Tensor()>& build, std::vector<Tensor> leaves,
                                double perturbation, double tolerance) {
  for (auto& leaf : leaves) leaf.zero_grad();
  Tensor out = build();
  if (out.size() != 1) throw std::invalid_argument("check_gradients: graph output must be scalar");
  out.backward();

  std::vector<std::vector<double>> analytic;
  for (auto& leaf : leaves) {
    auto g = leaf.grad();
    analytic.emplace_back(g.begin(), g.end());
  }

  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    for (std::size_t i = 0; i < leaves[k].size(); ++i) {
      const double a = analytic[k][i];
      double err = relative_error(a, central_difference(build, leaves[k], i, perturbation));
      if (err > tolerance) {
        ++result.refined;
        err = relative_error(a, central_difference(build, leaves[k], i, perturbation * 1e-3));
      }
      ++result.elements_checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst = "leaf" + std::to_string(k) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace ppu::tensor
