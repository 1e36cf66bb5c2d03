// Whole-network finite-difference checks on tiny configurations, in double
// precision.
#include "doctest.h"

#include "ppu/gradcheck.hpp"
#include "ppu/model_qe.hpp"
#include "ppu/model_uom.hpp"
#include "ppu/vocab.hpp"

using namespace ppu;
using namespace ppu::tensor;

namespace {

constexpr double kTolerance = 1e-3;
constexpr double kEpsilon = 1e-3;

void expect_ok(const GradCheckResult& r) {
  INFO("worst " << r.worst << " err " << r.max_relative_error << " refined " << r.refined);
  CHECK(r.elements_checked > 0);
  CHECK(r.max_relative_error <= kTolerance);
}

UoMClassifierConfig tiny_uom() {
  UoMClassifierConfig c;
  c.embed_dim = 4;
  c.widths = {3, 5};
  c.channels = 4;
  c.key_dim = 3;
  c.hidden = 5;
  c.category_levels = 2;
  c.category_dim = 2;
  c.max_len_title = 16;
  c.max_len_other = 16;
  return c;
}

QEConfig tiny_qe() {
  QEConfig c;
  c.embed_dim = 4;
  c.widths = {3, 5};
  c.channels = 4;
  c.depth = 3;
  c.image_hidden = 3;
  c.max_len_title = 8;
  return c;
}

}  // namespace

TEST_CASE("classifier gradients, two attributes with categories") {
  UoMClassifier model(tiny_uom(), CategoryVocab({"beauty", "blush", "grocery"}), 11);
  model.params().set_requires_grad(true);
  ProductRecord r;
  r.set_attribute("title", "Rose Blush Duo 2 x 4 g");
  r.set_attribute("description", "soft matte");
  r.categories = {"beauty", "blush"};
  auto cfg = tiny_uom();
  cfg.short_text = false;
  UoMClassifier long_model(cfg, CategoryVocab({"beauty", "blush", "grocery"}), 11);
  long_model.params().set_requires_grad(true);
  for (UoMClassifier* m : {&model, &long_model}) {
    const UoMInput in = m->prepare(r);
    CHECK(in.attributes.front().size() <= 16);
    const std::vector<int> target{2};
    auto build = [&] { return cross_entropy(reshape(m->forward(in, false, nullptr), {1, 3}), target); };
    expect_ok(check_gradients(build, m->params().tensors(), kEpsilon, kTolerance));
  }
}

TEST_CASE("classifier gradients with batch normalisation in training mode") {
  auto cfg = tiny_uom();
  cfg.use_batch_norm = true;
  cfg.use_categories = false;
  UoMClassifier model(cfg, CategoryVocab{}, 5);
  model.params().set_requires_grad(true);
  ProductRecord r;
  r.set_attribute("title", "Pure Ghee 500 ml Jar");
  const UoMInput in = model.prepare(r);
  const std::vector<int> target{1};
  auto build = [&] { return cross_entropy(reshape(model.forward(in, true, nullptr), {1, 3}), target); };
  expect_ok(check_gradients(build, model.params().tensors(), kEpsilon, kTolerance));
}

TEST_CASE("extractor gradients at n = 8 with one gold span") {
  QuantityExtractor model(tiny_qe(), 21);
  model.params().set_requires_grad(true);
  const auto ids = model.encode("title", "ab 12 cd");
  REQUIRE(ids.size() == 8);
  auto probs = Tensor::from({3}, {0.2, 0.5, 0.3}, true);
  auto build = [&] { return qe_loss(model.forward(ids, probs, false, nullptr), {{3, 5}}); };
  auto leaves = model.params().tensors();
  leaves.push_back(probs);
  expect_ok(check_gradients(build, leaves, kEpsilon, kTolerance));
}

TEST_CASE("extractor encoder gradient at n = 8") {
  QuantityExtractor model(tiny_qe(), 4);
  model.params().set_requires_grad(true);
  const auto ids = model.encode("title", "2 x 5 kg");
  auto build = [&] {
    auto y = model.qe_encode(ids, false, nullptr);
    std::vector<Real> w(y.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = Real(0.1) * Real(i % 7) - Real(0.3);
    return sum(mul(y, Tensor::from(y.shape(), w)));
  };
  expect_ok(check_gradients(build, model.params().tensors(), kEpsilon, kTolerance));
}

TEST_CASE("span loss gradient with respect to the image") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2, 2);
  std::vector<Real> logits(8 * 8 * 2);
  for (auto& v : logits) v = u(rng);
  auto raw = Tensor::from({8, 8, 2}, logits, true);
  auto build = [&] { return qe_loss(softmax(raw, 2), {{1, 3}, {5, 6}}); };
  expect_ok(check_gradients(build, {raw}, kEpsilon, kTolerance));
}
