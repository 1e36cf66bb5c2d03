#include "ppu/model_qe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ppu/errors.hpp"
#include "ppu/text.hpp"
#include "ppu/vocab.hpp"

namespace ppu {

using tensor::Real;
using tensor::Tensor;

nlohmann::json QEConfig::to_json() const {
  return {{"embed_dim", embed_dim},
          {"widths", widths},
          {"channels", channels},
          {"branch_width", branch_width},
          {"depth", depth},
          {"image_kernel", image_kernel},
          {"image_hidden", image_hidden},
          {"dropout", dropout},
          {"max_len_title", max_len_title},
          {"max_len_other", max_len_other},
          {"short_text", short_text},
          {"long_attributes", long_attributes},
          {"positive_weight_cap", positive_weight_cap}};
}

QEConfig QEConfig::from_json(const nlohmann::json& j) {
  QEConfig c;
  c.embed_dim = j.at("embed_dim");
  c.widths = j.at("widths").get<std::vector<std::size_t>>();
  c.channels = j.at("channels");
  c.branch_width = j.at("branch_width");
  c.depth = j.at("depth");
  c.image_kernel = j.at("image_kernel");
  c.image_hidden = j.at("image_hidden");
  c.dropout = j.at("dropout");
  c.max_len_title = j.at("max_len_title");
  c.max_len_other = j.at("max_len_other");
  c.short_text = j.at("short_text");
  c.long_attributes = j.at("long_attributes").get<std::vector<std::string>>();
  c.positive_weight_cap = j.at("positive_weight_cap");
  return c;
}

void QEConfig::validate() const {
  if (embed_dim == 0 || channels == 0 || depth == 0 || image_hidden == 0 || widths.empty() || max_len_title == 0 ||
      max_len_other == 0) {
    throw std::invalid_argument("extractor config: all dimensions must be >= 1");
  }
  for (auto w : widths)
    if (w % 2 == 0) throw std::invalid_argument("extractor config: conv widths must be odd");
  if (branch_width % 2 == 0 || image_kernel % 2 == 0) {
    throw std::invalid_argument("extractor config: branch and image kernels must be odd");
  }
  if (dropout < 0 || dropout >= 1) throw std::invalid_argument("extractor config: dropout must be in [0, 1)");
  if (positive_weight_cap < 1) throw std::invalid_argument("extractor config: positive_weight_cap must be >= 1");
}

QuantityExtractor::QuantityExtractor(QEConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  init(seed);
}

QuantityExtractor::QuantityExtractor(const Checkpoint& ck) {
  if (ck.kind != "qe") throw CheckpointError("expected a qe checkpoint, got '" + ck.kind + "'");
  if (ck.vocab_fingerprint != CharVocab::standard().fingerprint()) {
    throw CheckpointError("checkpoint vocabulary fingerprint " + fingerprint_hex(ck.vocab_fingerprint) +
                          " does not match " + fingerprint_hex(CharVocab::standard().fingerprint()));
  }
  try {
    config_ = QEConfig::from_json(ck.hyperparameters.at("config"));
    config_.validate();
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("bad extractor hyperparameters: ") + e.what());
  }
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
}

Checkpoint QuantityExtractor::to_checkpoint(std::uint64_t classifier_fingerprint) const {
  Checkpoint ck;
  ck.kind = "qe";
  ck.vocab_fingerprint = CharVocab::standard().fingerprint();
  ck.hyperparameters = {{"config", config_.to_json()}, {"classifier", fingerprint_hex(classifier_fingerprint)}};
  ck.params = params_.clone();
  return ck;
}

void QuantityExtractor::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto C = config_.channels;
  const auto d = config_.depth;
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
    in = C;
  }
  const auto bw = config_.branch_width;
  for (const char* b : {"branch.s", "branch.e"}) {
    params_.add_uniform(std::string(b) + ".kernel", {bw, C + 3, d}, glorot(bw * (C + 3), d), rng);
    params_.add_constant(std::string(b) + ".bias", {d}, 0.0);
  }
  const auto k = config_.image_kernel;
  const auto h = config_.image_hidden;
  params_.add_uniform("image.conv.kernel", {k, k, d + 2, h}, glorot(k * k * (d + 2), h), rng);
  params_.add_constant("image.conv.bias", {h}, 0.0);
  params_.add_uniform("image.out.kernel", {1, 1, h, 2}, glorot(h, 2), rng);
  params_.add_constant("image.out.bias", {2}, 0.0);
}

std::vector<std::string> QuantityExtractor::attribute_names(const ProductRecord& record) const {
  std::vector<std::string> names{"title"};
  if (!config_.short_text) {
    for (const auto& name : config_.long_attributes)
      if (record.attribute(name)) names.push_back(name);
  }
  return names;
}

std::vector<int> QuantityExtractor::encode(const std::string& attribute, std::string_view text) const {
  const std::size_t max_len = attribute == "title" ? config_.max_len_title : config_.max_len_other;
  return encode_text(text, CharVocab::standard(), max_len).ids;
}

Tensor QuantityExtractor::qe_encode(std::span<const int> ids, bool training, std::mt19937_64* rng) const {
  Tensor x = tensor::embed(params_.at("char_embed"), ids);
  for (std::size_t l = 0; l < config_.widths.size(); ++l) {
    const std::string p = "enc" + std::to_string(l);
    x = tensor::conv1d(x, params_.at(p + ".kernel"), params_.at(p + ".bias"));
    x = tensor::relu(tensor::scale_shift(x, params_.at(p + ".gamma"), params_.at(p + ".beta")));
    if (training && rng) x = tensor::dropout(x, config_.dropout, *rng, true);
  }
  return x;
}

std::pair<Tensor, Tensor> QuantityExtractor::branch_se(const Tensor& y, const Tensor& uom_probs) const {
  if (uom_probs.rank() != 1 || uom_probs.dim(0) != 3) throw std::invalid_argument("branch_se: uom_probs must be [3]");
  const std::size_t n = y.dim(0);
  Tensor conditioned = tensor::concat_last({y, tensor::broadcast_rows(uom_probs, n)});
  Tensor s = tensor::conv1d(conditioned, params_.at("branch.s.kernel"), params_.at("branch.s.bias"));
  Tensor e = tensor::conv1d(conditioned, params_.at("branch.e.kernel"), params_.at("branch.e.bias"));
  std::vector<Real> pos_s(n * 2), pos_e(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    const Real p = static_cast<Real>(double(i) / double(n));
    pos_s[i * 2] = p;
    pos_s[i * 2 + 1] = 0;
    pos_e[i * 2] = p;
    pos_e[i * 2 + 1] = 1;
  }
  s = tensor::concat_last({s, Tensor::from({n, 2}, std::move(pos_s))});
  e = tensor::concat_last({e, Tensor::from({n, 2}, std::move(pos_e))});
  return {s, e};
}

Tensor QuantityExtractor::build_span_image(const Tensor& s, const Tensor& e) const {
  if (s.rank() != 2 || e.rank() != 2 || s.shape() != e.shape()) {
    throw std::invalid_argument("build_span_image: s " + tensor::shape_string(s.shape()) + " and e " +
                                tensor::shape_string(e.shape()) + " must have the same shape");
  }
  Tensor img = tensor::span_outer(s, e);
  img = tensor::relu(tensor::conv2d(img, params_.at("image.conv.kernel"), params_.at("image.conv.bias")));
  img = tensor::conv2d(img, params_.at("image.out.kernel"), params_.at("image.out.bias"));
  return tensor::softmax(img, 2);
}

Tensor QuantityExtractor::forward(std::span<const int> ids, const Tensor& uom_probs, bool training,
                                  std::mt19937_64* rng) const {
  if (ids.empty()) throw std::invalid_argument("extractor forward: empty input");
  auto [s, e] = branch_se(qe_encode(ids, training, rng), uom_probs);
  return build_span_image(s, e);
}

SpanImage QuantityExtractor::span_image(std::span<const int> ids, const std::array<double, 3>& uom_probs) const {
  if (ids.empty()) return {};
  tensor::NoGradGuard guard;
  Tensor probs = Tensor::from({3}, {Real(uom_probs[0]), Real(uom_probs[1]), Real(uom_probs[2])});
  return to_span_image(forward(ids, probs, false, nullptr));
}

SpanImage to_span_image(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != image.dim(1) || image.dim(2) != 2) {
    throw std::invalid_argument("to_span_image: expected [n x n x 2], got " + tensor::shape_string(image.shape()));
  }
  SpanImage out;
  out.n = image.dim(0);
  out.scores.assign(image.values().begin(), image.values().end());
  return out;
}

Tensor qe_loss(const Tensor& image, const std::vector<std::pair<std::size_t, std::size_t>>& gold,
               double positive_weight_cap) {
  if (image.rank() != 3 || image.dim(0) != image.dim(1) || image.dim(2) != 2) {
    throw std::invalid_argument("qe_loss: expected [n x n x 2], got " + tensor::shape_string(image.shape()));
  }
  const std::size_t n = image.dim(0);
  std::vector<int> targets(n * n, -1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) targets[i * n + j] = 0;
  std::size_t positives = 0;
  for (const auto& [start, end] : gold) {
    if (end <= start || end > n) {
      throw std::out_of_range("qe_loss: span [" + std::to_string(start) + ", " + std::to_string(end) +
                              ") outside a length-" + std::to_string(n) + " sequence");
    }
    auto& t = targets[start * n + end - 1];
    if (t != 1) ++positives;
    t = 1;
  }
  std::vector<Real> weights(n * n, 1);
  if (positives > 0) {
    const double area = double(n) * double(n + 1) / 2;
    const auto w = static_cast<Real>(std::min(area / double(positives), positive_weight_cap));
    for (std::size_t p = 0; p < n * n; ++p)
      if (targets[p] == 1) weights[p] = w;
  }
  return tensor::cross_entropy(image, targets, weights);
}

std::vector<DecodedSpan> select_spans(const SpanImage& image, double threshold, const SpanFilter& allowed) {
  struct Pixel {
    double score;
    std::size_t i, j;
  };
  std::vector<Pixel> pixels;
  const std::size_t n = image.n;
  if (allowed) {
    for (const auto& [i, j] : *allowed) {
      if (i > j || j >= n) continue;
      const double sc = image.span_score(i, j);
      if (sc > threshold) pixels.push_back({sc, i, j});
    }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        const double sc = image.span_score(i, j);
        if (sc > threshold) pixels.push_back({sc, i, j});
      }
  }
  std::sort(pixels.begin(), pixels.end(), [](const Pixel& a, const Pixel& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  std::vector<DecodedSpan> out;
  for (const auto& p : pixels) {
    const bool overlaps = std::any_of(out.begin(), out.end(), [&](const DecodedSpan& s) {
      return p.i < s.end && s.start < p.j + 1;
    });
    if (overlaps) continue;
    DecodedSpan s;
    s.start = p.i;
    s.end = p.j + 1;
    s.score = p.score;
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const DecodedSpan& a, const DecodedSpan& b) { return a.start < b.start; });
  return out;
}

DecodeResult decode_spans(const SpanImage& image, std::string_view text, UoMType uom, double threshold,
                          const SpanFilter& allowed, const UnitLexicon& lexicon) {
  if (!(threshold > 0 && threshold < 1)) throw std::invalid_argument("decode_spans: threshold must be in (0, 1)");
  DecodeResult result;
  result.spans = select_spans(image, threshold, allowed);
  if (result.spans.empty()) {
    result.kind = uom == UoMType::count ? DecodeResult::Kind::quantity_one : DecodeResult::Kind::abstain;
    return result;
  }
  result.kind = DecodeResult::Kind::spans;
  const std::u32string folded = fold_case(utf8_decode(text));
  for (auto& s : result.spans) {
    if (s.end <= folded.size()) s.value = parse_numeral(std::u32string_view(folded).substr(s.start, s.end - s.start));
    const auto cue = span_uom_type(text, s.start, s.end, lexicon);
    s.cued_type = cue.type;
    s.unit = cue.unit;
  }
  return result;
}

}  // namespace ppu
