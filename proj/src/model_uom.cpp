#include "ppu/model_uom.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "ppu/errors.hpp"

namespace ppu {

using tensor::Real;
using tensor::Tensor;

CategoryVocab::CategoryVocab(std::vector<std::string> names) : names_(std::move(names)) {}

CategoryVocab CategoryVocab::build(const std::vector<ProductRecord>& records) {
  std::set<std::string> all;
  for (const auto& r : records) all.insert(r.categories.begin(), r.categories.end());
  return CategoryVocab(std::vector<std::string>(all.begin(), all.end()));
}

int CategoryVocab::index_of(const std::string& name) const {
  auto it = std::lower_bound(names_.begin(), names_.end(), name);
  if (it == names_.end() || *it != name) return 0;
  return static_cast<int>(it - names_.begin()) + 1;
}

std::size_t category_embedding_dim(std::size_t m) {
  const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));
  return std::max<std::size_t>(4, root);
}

nlohmann::json UoMClassifierConfig::to_json() const {
  return {{"embed_dim", embed_dim},
          {"widths", widths},
          {"channels", channels},
          {"pool_window", pool_window},
          {"key_dim", key_dim},
          {"hidden", hidden},
          {"category_levels", category_levels},
          {"category_dim", category_dim},
          {"use_categories", use_categories},
          {"short_text", short_text},
          {"use_batch_norm", use_batch_norm},
          {"dropout", dropout},
          {"max_len_title", max_len_title},
          {"max_len_other", max_len_other},
          {"long_attributes", long_attributes}};
}

UoMClassifierConfig UoMClassifierConfig::from_json(const nlohmann::json& j) {
  UoMClassifierConfig c;
  c.embed_dim = j.at("embed_dim");
  c.widths = j.at("widths").get<std::vector<std::size_t>>();
  c.channels = j.at("channels");
  c.pool_window = j.at("pool_window");
  c.key_dim = j.at("key_dim");
  c.hidden = j.at("hidden");
  c.category_levels = j.at("category_levels");
  c.category_dim = j.at("category_dim");
  c.use_categories = j.at("use_categories");
  c.short_text = j.at("short_text");
  c.use_batch_norm = j.at("use_batch_norm");
  c.dropout = j.at("dropout");
  c.max_len_title = j.at("max_len_title");
  c.max_len_other = j.at("max_len_other");
  c.long_attributes = j.at("long_attributes").get<std::vector<std::string>>();
  return c;
}

void UoMClassifierConfig::validate() const {
  if (embed_dim == 0 || channels == 0 || pool_window == 0 || key_dim == 0 || hidden == 0 || widths.empty() ||
      category_levels == 0 || max_len_title == 0 || max_len_other == 0) {
    throw std::invalid_argument("classifier config: all dimensions must be >= 1");
  }
  for (auto w : widths)
    if (w % 2 == 0) throw std::invalid_argument("classifier config: conv widths must be odd");
  if (dropout < 0 || dropout >= 1) throw std::invalid_argument("classifier config: dropout must be in [0, 1)");
}

UoMPrediction prediction_from_probs(std::span<const Real> probs) {
  UoMPrediction p;
  std::size_t best = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    p.probs[i] = probs[i];
    if (probs[i] > probs[best]) best = i;
  }
  p.predicted = kAllUoMTypes[best];
  p.confidence = p.probs[best];
  return p;
}

UoMClassifier::UoMClassifier(UoMClassifierConfig config, CategoryVocab categories, std::uint64_t seed)
    : config_(std::move(config)), categories_(std::move(categories)) {
  config_.validate();
  category_dim_ = config_.category_dim ? config_.category_dim : category_embedding_dim(categories_.known());
  config_.category_dim = category_dim_;
  init(seed);
}

UoMClassifier::UoMClassifier(const Checkpoint& ck) {
  if (ck.kind != "uom") throw CheckpointError("expected a uom checkpoint, got '" + ck.kind + "'");
  if (ck.vocab_fingerprint != CharVocab::standard().fingerprint()) {
    throw CheckpointError("checkpoint vocabulary fingerprint " + fingerprint_hex(ck.vocab_fingerprint) +
                          " does not match " + fingerprint_hex(CharVocab::standard().fingerprint()));
  }
  try {
    config_ = UoMClassifierConfig::from_json(ck.hyperparameters.at("config"));
    config_.validate();
    categories_ = CategoryVocab(ck.hyperparameters.at("categories").get<std::vector<std::string>>());
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("bad classifier hyperparameters: ") + e.what());
  }
  category_dim_ = config_.category_dim;
  init(0);
  for (const auto& name : params_.names()) {
    if (!ck.params.contains(name)) throw CheckpointError("checkpoint lacks tensor '" + name + "'");
    const auto& src = ck.params.at(name);
    auto& dst = params_.at(name);
    if (src.shape() != dst.shape()) {
      throw CheckpointError("tensor '" + name + "' has shape " + tensor::shape_string(src.shape()) + ", expected " +
                            tensor::shape_string(dst.shape()));
    }
    std::copy(src.values().begin(), src.values().end(), dst.values().begin());
  }
  params_.norm_stats = ck.params.norm_stats;
}

Checkpoint UoMClassifier::to_checkpoint() const {
  Checkpoint ck;
  ck.kind = "uom";
  ck.vocab_fingerprint = CharVocab::standard().fingerprint();
  ck.hyperparameters = {{"config", config_.to_json()}, {"categories", categories_.names()}};
  ck.params = params_.clone();
  return ck;
}

void UoMClassifier::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto C = config_.channels;
  auto glorot = [](std::size_t fan_in, std::size_t fan_out) { return std::sqrt(6.0 / double(fan_in + fan_out)); };
  params_.add_uniform("char_embed", {CharVocab::kSize, config_.embed_dim}, 0.5, rng);
  std::size_t in = config_.embed_dim;
  for (std::size_t l = 0; l < config_.widths.size(); ++l) {
    const std::string p = "enc" + std::to_string(l);
    const auto w = config_.widths[l];
    params_.add_uniform(p + ".kernel", {w, in, C}, glorot(w * in, C), rng);
    params_.add_constant(p + ".bias", {C}, 0.0);
    params_.add_constant(p + ".gamma", {C}, 1.0);
    params_.add_constant(p + ".beta", {C}, 0.0);
    if (config_.use_batch_norm) params_.norm_stats[p] = {std::vector<double>(C, 0.0), std::vector<double>(C, 1.0)};
    in = C;
  }
  params_.add_uniform("attn.key.W", {C, config_.key_dim}, glorot(C, config_.key_dim), rng);
  params_.add_constant("attn.key.b", {config_.key_dim}, 0.0);
  params_.add_uniform("attn.score", {config_.key_dim, 1}, glorot(config_.key_dim, 1), rng);
  std::size_t head_in = C;
  if (config_.use_categories) {
    params_.add_uniform("cat_embed", {categories_.size(), category_dim_}, 0.5, rng);
    head_in += config_.category_levels * category_dim_;
  }
  params_.add_uniform("head.hidden.W", {head_in, config_.hidden}, glorot(head_in, config_.hidden), rng);
  params_.add_constant("head.hidden.b", {config_.hidden}, 0.0);
  params_.add_uniform("head.out.W", {config_.hidden, 3}, glorot(config_.hidden, 3), rng);
  params_.add_constant("head.out.b", {3}, 0.0);
}

std::vector<std::string> UoMClassifier::attribute_names(const ProductRecord& record) const {
  std::vector<std::string> names{"title"};
  if (!config_.short_text) {
    for (const auto& name : config_.long_attributes)
      if (record.attribute(name)) names.push_back(name);
  }
  return names;
}

UoMInput UoMClassifier::prepare(const ProductRecord& record) const {
  UoMInput in;
  const auto& vocab = CharVocab::standard();
  for (const auto& name : attribute_names(record)) {
    const auto* text = record.attribute(name);
    const std::size_t max_len = name == "title" ? config_.max_len_title : config_.max_len_other;
    in.attributes.push_back(text ? encode_text(std::string_view(*text), vocab, max_len).ids : std::vector<int>{});
  }
  for (std::size_t l = 0; l < config_.category_levels; ++l)
    in.categories.push_back(l < record.categories.size() ? categories_.index_of(record.categories[l]) : 0);
  return in;
}

Tensor UoMClassifier::normalize(const Tensor& x, const std::string& prefix, bool training) const {
  const auto& gamma = params_.at(prefix + ".gamma");
  const auto& beta = params_.at(prefix + ".beta");
  if (!config_.use_batch_norm) return tensor::scale_shift(x, gamma, beta);
  auto& running = params_.norm_stats[prefix];
  if (!training) return tensor::batch_norm(x, gamma, beta, running, false, nullptr);
  tensor::BatchNormStats observed;
  auto y = tensor::batch_norm(x, gamma, beta, running, true, &observed);
  for (std::size_t c = 0; c < running.mean.size(); ++c) {
    running.mean[c] = 0.9 * running.mean[c] + 0.1 * observed.mean[c];
    running.var[c] = 0.9 * running.var[c] + 0.1 * observed.var[c];
  }
  return y;
}

Tensor UoMClassifier::attribute_encode(std::span<const int> ids, bool training, std::mt19937_64* rng) const {
  // Trailing padding carries no text; a pad-only attribute encodes to zeros.
  std::size_t n = ids.size();
  while (n > 0 && ids[n - 1] == CharVocab::kPadIndex) --n;
  if (n == 0) return Tensor::zeros({config_.channels});
  Tensor x = tensor::embed(params_.at("char_embed"), ids.first(n));
  for (std::size_t l = 0; l < config_.widths.size(); ++l) {
    const std::string p = "enc" + std::to_string(l);
    x = tensor::conv1d(x, params_.at(p + ".kernel"), params_.at(p + ".bias"));
    x = tensor::relu(normalize(x, p, training));
    x = tensor::maxpool1d(x, config_.pool_window);
    if (training && rng) x = tensor::dropout(x, config_.dropout, *rng, true);
  }
  return tensor::max_rows(x);
}

Tensor UoMClassifier::attention_pool(const Tensor& encodings, std::vector<double>* weights) const {
  if (encodings.rank() != 2 || encodings.dim(0) == 0) {
    throw std::invalid_argument("attention_pool: need at least one attribute encoding");
  }
  const std::size_t m = encodings.dim(0);
  Tensor keys = tensor::affine(encodings, params_.at("attn.key.W"), params_.at("attn.key.b"));
  Tensor scores = tensor::reshape(tensor::affine(keys, params_.at("attn.score"), Tensor()), {m});
  Tensor w = tensor::softmax(scores, 0);
  if (weights) weights->assign(w.values().begin(), w.values().end());
  return tensor::weighted_sum_rows(w, encodings);
}

Tensor UoMClassifier::embed_categories(std::span<const int> ids) const {
  const auto& table = params_.at("cat_embed");
  std::vector<int> safe(ids.begin(), ids.end());
  for (auto& id : safe)
    if (id < 0 || static_cast<std::size_t>(id) >= categories_.size()) id = 0;
  return tensor::reshape(tensor::embed(table, safe), {safe.size() * category_dim_});
}

Tensor UoMClassifier::forward(const UoMInput& input, bool training, std::mt19937_64* rng) const {
  std::vector<Tensor> encs;
  for (const auto& ids : input.attributes) encs.push_back(attribute_encode(ids, training, rng));
  Tensor pooled = attention_pool(tensor::stack_rows(encs));
  Tensor features = pooled;
  if (config_.use_categories) features = tensor::concat_last({pooled, embed_categories(input.categories)});
  Tensor h = tensor::relu(tensor::affine(features, params_.at("head.hidden.W"), params_.at("head.hidden.b")));
  if (training && rng) h = tensor::dropout(h, config_.dropout, *rng, true);
  Tensor logits = tensor::affine(h, params_.at("head.out.W"), params_.at("head.out.b"));
  return tensor::softmax(logits, 0);
}

UoMPrediction UoMClassifier::predict(const ProductRecord& record) const {
  tensor::NoGradGuard guard;
  const Tensor probs = forward(prepare(record), false, nullptr);
  return prediction_from_probs(probs.values());
}

}  // namespace ppu
