// End-to-end inference: classifier probabilities condition the extractor,
// decoded spans are aggregated into a total. Also the rule baseline in the
// same output shape, the prediction row schema, and the latency bench.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ppu/aggregate.hpp"
#include "ppu/model_qe.hpp"
#include "ppu/model_uom.hpp"
#include "ppu/rules.hpp"

namespace ppu {

struct Prediction {
  std::string id;
  UoMPrediction uom;
  DecodeResult::Kind kind = DecodeResult::Kind::abstain;
  std::vector<DecodedSpan> spans;
  std::optional<TotalQuantity> total;  // nullopt: abstain
  std::vector<std::string> warnings;
};

struct PipelineOptions {
  double threshold = 0.5;
  // Restrict decoding to pixels of numeral candidates found by the tokenizer.
  bool candidate_filter = true;
};

// Holds references; both models must outlive the pipeline. predict() is
// read-only and safe to call from several threads at once.
class Pipeline {
 public:
  Pipeline(const UoMClassifier& classifier, const QuantityExtractor& extractor, PipelineOptions options = {},
           const UnitLexicon& lexicon = UnitLexicon::standard());

  Prediction predict(const ProductRecord& record) const;
  Prediction predict(const ProductRecord& record, double threshold) const;

  const PipelineOptions& options() const { return options_; }
  const UoMClassifier& classifier() const { return *classifier_; }
  const QuantityExtractor& extractor() const { return *extractor_; }

 private:
  const UoMClassifier* classifier_;
  const QuantityExtractor* extractor_;
  PipelineOptions options_;
  const UnitLexicon* lexicon_;
};

// Order-preserving; records are split into contiguous chunks per thread.
std::vector<Prediction> predict_all(const Pipeline& pipeline, const std::vector<ProductRecord>& records,
                                    std::size_t threads = 1);

Prediction baseline_predict(const ProductRecord& record, const UnitLexicon& lexicon = UnitLexicon::standard(),
                            const RulesConfig& config = {});

// Output row:
//   {"id", "uom", "confidence", "probs": {"weight","volume","count"},
//    "spans": [{"attribute","start","end","score","value"}],
//    "total": {"value","unit"} | null, "abstain": bool}
nlohmann::ordered_json prediction_to_json(const Prediction& p);
// Empty string when `row` follows the schema, else the first violation.
std::string check_prediction_row(const nlohmann::json& row);
// Error row for an input line that could not be parsed.
nlohmann::ordered_json error_row(std::size_t line, const std::string& message);

struct BenchConfig {
  std::vector<std::size_t> threads{2, 4, 8};
  std::size_t iterations = 100;  // timed calls per worker
  std::size_t warmup = 10;
};

struct BenchRow {
  std::size_t threads = 0;
  double mean_ms = 0;
  double p90_ms = 0;
  std::size_t samples = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::size_t batch = 1;
  std::string attributes;  // short_text | all_text

  nlohmann::ordered_json to_json() const;
};

// For each thread count, that many workers each time `iterations`
// single-record predictions over `inputs` (cycling) after `warmup` untimed
// ones. Throws std::invalid_argument if iterations < 100, warmup < 10, or
// inputs is empty.
BenchReport bench(const Pipeline& pipeline, const std::vector<ProductRecord>& inputs, const BenchConfig& config);

// Nearest-rank 90th percentile.
double percentile90(std::vector<double> samples);

}  // namespace ppu
