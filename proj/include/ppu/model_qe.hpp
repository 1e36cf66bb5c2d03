// Span-image quantity extractor conditioned on the classifier's UoM
// probabilities.
//
// Pixel (i, j) of the span image scores the character span [i, j] (end
// inclusive): rows are start positions, columns end positions. Depth channel 1
// is "span", channel 0 "not a span". Elsewhere spans are half-open [start, end).

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ppu/checkpoint.hpp"
#include "ppu/lexicon.hpp"
#include "ppu/params.hpp"
#include "ppu/record.hpp"

namespace ppu {

struct QEConfig {
  std::size_t embed_dim = 16;
  std::vector<std::size_t> widths{3, 5, 5, 3};
  std::size_t channels = 32;
  std::size_t branch_width = 3;
  std::size_t depth = 16;  // d of the start/end branches before positional channels
  std::size_t image_kernel = 3;
  std::size_t image_hidden = 8;
  double dropout = 0.1;
  std::size_t max_len_title = 256;
  std::size_t max_len_other = 512;
  bool short_text = true;
  std::vector<std::string> long_attributes{"description", "bullet_points", "ocr_text"};
  double positive_weight_cap = 1000.0;

  nlohmann::json to_json() const;
  static QEConfig from_json(const nlohmann::json& j);
  void validate() const;
};

// Post-softmax span image, n x n x 2 row-major, kept as plain values.
struct SpanImage {
  std::size_t n = 0;
  std::vector<float> scores;

  float span_score(std::size_t i, std::size_t j) const { return scores[(i * n + j) * 2 + 1]; }
  float other_score(std::size_t i, std::size_t j) const { return scores[(i * n + j) * 2]; }
};

struct DecodedSpan {
  std::string attribute;
  std::size_t start = 0;  // [start, end)
  std::size_t end = 0;
  double score = 0;
  std::optional<double> value;
  UoMType cued_type = UoMType::count;
  std::optional<std::string> unit;
};

struct DecodeResult {
  enum class Kind { spans, quantity_one, abstain };
  Kind kind = Kind::abstain;
  std::vector<DecodedSpan> spans;
};

// Pixel (start, end-1) of each allowed half-open span; nullopt allows all.
using SpanFilter = std::optional<std::set<std::pair<std::size_t, std::size_t>>>;

// Keeps upper-triangle pixels scoring above `threshold` (restricted to
// `allowed` when given), accepts them greedily by score (ties: earlier
// start, then shorter), skipping any overlap with an accepted span. An empty
// result gives quantity_one for count and abstain otherwise. Spans come back
// in text order.
std::vector<DecodedSpan> select_spans(const SpanImage& image, double threshold, const SpanFilter& allowed = {});
DecodeResult decode_spans(const SpanImage& image, std::string_view text, UoMType uom, double threshold,
                          const SpanFilter& allowed = {}, const UnitLexicon& lexicon = UnitLexicon::standard());

class QuantityExtractor {
 public:
  QuantityExtractor(QEConfig config, std::uint64_t seed);
  explicit QuantityExtractor(const Checkpoint& checkpoint);

  Checkpoint to_checkpoint(std::uint64_t classifier_fingerprint = 0) const;

  std::vector<std::string> attribute_names(const ProductRecord& record) const;
  std::vector<int> encode(const std::string& attribute, std::string_view text) const;

  // ids -> y [n x channels]
  tensor::Tensor qe_encode(std::span<const int> ids, bool training, std::mt19937_64* rng) const;
  // y, probs [3] -> (s, e), each [n x (depth + 2)]
  std::pair<tensor::Tensor, tensor::Tensor> branch_se(const tensor::Tensor& y, const tensor::Tensor& uom_probs) const;
  // s, e -> [n x n x 2] depth-softmaxed image
  tensor::Tensor build_span_image(const tensor::Tensor& s, const tensor::Tensor& e) const;
  tensor::Tensor forward(std::span<const int> ids, const tensor::Tensor& uom_probs, bool training,
                         std::mt19937_64* rng) const;

  SpanImage span_image(std::span<const int> ids, const std::array<double, 3>& uom_probs) const;

  const QEConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 private:
  void init(std::uint64_t seed);

  QEConfig config_;
  ParamStore params_;
};

// Weighted 2-class cross-entropy over the upper triangle. Gold spans are
// half-open [start, end) and must satisfy end <= n (std::out_of_range
// otherwise). Positive pixels get weight min(area / positives, cap).
tensor::Tensor qe_loss(const tensor::Tensor& image, const std::vector<std::pair<std::size_t, std::size_t>>& gold,
                       double positive_weight_cap = 1000.0);

SpanImage to_span_image(const tensor::Tensor& image);

}  // namespace ppu
