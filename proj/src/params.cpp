#include "ppu/params.hpp"

#include <stdexcept>

namespace ppu {

using tensor::Real;
using tensor::Shape;
using tensor::Tensor;

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

Tensor& ParamStore::add(const std::string& name, Tensor t) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  index_[name] = tensors_.size();
  names_.push_back(name);
  tensors_.push_back(std::move(t));
  return tensors_.back();
}

Tensor& ParamStore::add_uniform(const std::string& name, Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<Real> v(tensor::shape_size(shape));
  for (auto& x : v) x = static_cast<Real>(u(rng));
  return add(name, Tensor::from(std::move(shape), std::move(v), true));
}

Tensor& ParamStore::add_constant(const std::string& name, Shape shape, double value) {
  return add(name, Tensor::full(std::move(shape), static_cast<Real>(value), true));
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return tensors_[it->second];
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return tensors_[it->second];
}

std::vector<Tensor> ParamStore::tensors() const { return tensors_; }

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

ParamStore ParamStore::clone() const {
  ParamStore copy;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const auto& t = tensors_[i];
    auto v = t.values();
    copy.add(names_[i], Tensor::from(t.shape(), std::vector<Real>(v.begin(), v.end()), t.requires_grad()));
  }
  copy.norm_stats = norm_stats;
  return copy;
}

void ParamStore::zero_grad() {
  for (auto& t : tensors_) t.zero_grad();
}

void ParamStore::set_requires_grad(bool on) {
  for (auto& t : tensors_) t.set_requires_grad(on);
}

std::uint64_t ParamStore::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    h = fnv1a(names_[i].data(), names_[i].size(), h);
    for (auto d : tensors_[i].shape()) {
      const std::uint64_t d64 = d;
      h = fnv1a(&d64, sizeof d64, h);
    }
    auto v = tensors_[i].values();
    h = fnv1a(v.data(), v.size_bytes(), h);
  }
  return h;
}

}  // namespace ppu
