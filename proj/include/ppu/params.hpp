#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "ppu/tensor.hpp"

namespace ppu {

// Named, insertion-ordered trainable tensors plus non-trainable batch-norm
// statistics. Copies made with clone() share nothing with the original.
class ParamStore {
 public:
  tensor::Tensor& add_uniform(const std::string& name, tensor::Shape shape, double bound, std::mt19937_64& rng);
  tensor::Tensor& add_constant(const std::string& name, tensor::Shape shape, double value);
  tensor::Tensor& add(const std::string& name, tensor::Tensor t);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  tensor::Tensor& at(const std::string& name);
  const tensor::Tensor& at(const std::string& name) const;

  const std::vector<std::string>& names() const { return names_; }
  std::vector<tensor::Tensor> tensors() const;
  std::size_t parameter_count() const;

  ParamStore clone() const;
  void zero_grad();
  void set_requires_grad(bool on);

  // FNV-1a over names, shapes, and raw value bytes.
  std::uint64_t fingerprint() const;

  std::map<std::string, tensor::BatchNormStats> norm_stats;

 private:
  std::vector<std::string> names_;
  std::vector<tensor::Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace ppu
