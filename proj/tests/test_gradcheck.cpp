// Built against the double-precision library so finite differences are not
// swamped by float rounding.
#include "doctest.h"

#include <random>

#include "ppu/gradcheck.hpp"

using namespace ppu::tensor;

namespace {

constexpr double kTolerance = 1e-3;
constexpr double kEpsilon = 1e-3;

Tensor random_leaf(Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Real> v(shape_size(shape));
  for (auto& x : v) x = u(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

// Fixed random projection so every output element contributes to the scalar.
Tensor project(const Tensor& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Real> w(y.size());
  for (auto& x : w) x = u(rng);
  return sum(mul(y, Tensor::from(y.shape(), w)));
}

void expect_ok(const GradCheckResult& r) {
  INFO("worst " << r.worst << " err " << r.max_relative_error << " refined " << r.refined);
  CHECK(r.elements_checked > 0);
  CHECK(r.max_relative_error <= kTolerance);
}

}  // namespace

TEST_CASE("linear graph is exact") {
  std::mt19937_64 rng(1);
  auto x = random_leaf({4}, rng);
  auto r = check_gradients([&] { return project(scale(x, 3.0), 9); }, {x}, kEpsilon, kTolerance);
  CHECK(r.max_relative_error <= 1e-5);
}

TEST_CASE("conv1d gradients") {
  std::mt19937_64 rng(2);
  auto x = random_leaf({7, 3}, rng);
  auto k = random_leaf({3, 3, 2}, rng);
  auto b = random_leaf({2}, rng);
  expect_ok(check_gradients([&] { return project(conv1d(x, k, b), 3); }, {x, k, b}, kEpsilon, kTolerance));
  auto k5 = random_leaf({5, 3, 2}, rng);
  expect_ok(check_gradients([&] { return project(conv1d(x, k5, b), 4); }, {x, k5, b}, kEpsilon, kTolerance));
}

TEST_CASE("conv2d gradients") {
  std::mt19937_64 rng(3);
  auto img = random_leaf({5, 5, 2}, rng);
  auto k = random_leaf({3, 3, 2, 2}, rng);
  auto b = random_leaf({2}, rng);
  expect_ok(check_gradients([&] { return project(conv2d(img, k, b), 5); }, {img, k, b}, kEpsilon, kTolerance));
}

TEST_CASE("affine, embed, pooling, elementwise gradients") {
  std::mt19937_64 rng(4);
  auto x = random_leaf({3, 4}, rng);
  auto w = random_leaf({4, 2}, rng);
  auto b = random_leaf({2}, rng);
  expect_ok(check_gradients([&] { return project(affine(x, w, b), 6); }, {x, w, b}, kEpsilon, kTolerance));

  auto table = random_leaf({5, 3}, rng);
  std::vector<int> ids{4, 0, 4, 2};
  expect_ok(check_gradients([&] { return project(embed(table, ids), 7); }, {table}, kEpsilon, kTolerance));

  auto seq = random_leaf({7, 3}, rng);
  expect_ok(check_gradients([&] { return project(maxpool1d(seq, 2), 8); }, {seq}, kEpsilon, kTolerance));
  expect_ok(check_gradients([&] { return project(max_rows(seq), 9); }, {seq}, kEpsilon, kTolerance));
  expect_ok(check_gradients([&] { return project(relu(seq), 10); }, {seq}, kEpsilon, kTolerance));

  auto a = random_leaf({3, 4}, rng);
  expect_ok(check_gradients([&] { return project(mul(add(x, a), a), 11); }, {x, a}, kEpsilon, kTolerance));

  auto g = random_leaf({4}, rng);
  auto be = random_leaf({4}, rng);
  expect_ok(check_gradients([&] { return project(scale_shift(x, g, be), 12); }, {x, g, be}, kEpsilon, kTolerance));
  BatchNormStats running{{0, 0, 0, 0}, {1, 1, 1, 1}};
  expect_ok(check_gradients([&] { return project(batch_norm(x, g, be, running, true, nullptr), 13); }, {x, g, be},
                            kEpsilon, kTolerance));

  auto v = random_leaf({4}, rng);
  auto weights = random_leaf({3}, rng);
  expect_ok(check_gradients([&] { return project(concat_last({x, broadcast_rows(v, 3)}), 14); }, {x, v}, kEpsilon,
                            kTolerance));
  expect_ok(check_gradients([&] { return project(weighted_sum_rows(weights, x), 15); }, {weights, x}, kEpsilon,
                            kTolerance));
  expect_ok(check_gradients([&] { return project(stack_rows({v, g}), 16); }, {v, g}, kEpsilon, kTolerance));
}

TEST_CASE("span_outer and softmax + cross-entropy gradients") {
  std::mt19937_64 rng(5);
  auto s = random_leaf({6, 3}, rng);
  auto e = random_leaf({6, 3}, rng);
  expect_ok(check_gradients([&] { return project(span_outer(s, e), 17); }, {s, e}, kEpsilon, kTolerance));

  auto logits = random_leaf({5, 4}, rng);
  std::vector<int> targets{0, 3, -1, 2, 1};
  std::vector<Real> w{1, 2, 1, 0.5, 3};
  expect_ok(check_gradients([&] { return cross_entropy(softmax(logits, 1), targets, w); }, {logits}, kEpsilon,
                            kTolerance));

  auto cube = random_leaf({3, 4, 2}, rng);
  for (std::size_t axis = 0; axis < 3; ++axis)
    expect_ok(check_gradients([&] { return project(softmax(cube, axis), 18 + axis); }, {cube}, kEpsilon, kTolerance));
}

TEST_CASE("randomized shapes up to 8x8x8") {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> extent(1, 8);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t n = extent(rng), c = extent(rng), d = extent(rng);
    auto x = random_leaf({n, c}, rng);
    auto k = random_leaf({3, c, d}, rng);
    auto b = random_leaf({d}, rng);
    expect_ok(check_gradients([&] { return project(softmax(relu(conv1d(x, k, b)), 1), 30 + trial); }, {x, k, b},
                              kEpsilon, kTolerance));
    auto img = random_leaf({n, n, c}, rng);
    auto k2 = random_leaf({3, 3, c, d}, rng);
    expect_ok(check_gradients([&] { return project(conv2d(img, k2, b), 40 + trial); }, {img, k2, b}, kEpsilon,
                              kTolerance));
  }
}

TEST_CASE("reshape, sum and dropout gradients") {
  std::mt19937_64 rng(7);
  auto x = random_leaf({4, 3}, rng);
  expect_ok(check_gradients([&] { return project(reshape(x, {2, 6}), 50); }, {x}, kEpsilon, kTolerance));
  expect_ok(check_gradients([&] { return sum(mul(x, x)); }, {x}, kEpsilon, kTolerance));
  // Same mask on every evaluation: reseed inside the graph builder.
  expect_ok(check_gradients(
      [&] {
        std::mt19937_64 mask_rng(51);
        return project(dropout(x, 0.4, mask_rng, true), 52);
      },
      {x}, kEpsilon, kTolerance));
}
