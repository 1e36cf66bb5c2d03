// Two-phase training (classifier, then extractor against the frozen
// classifier), data splits, metrics and ablation runs.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ppu/model_qe.hpp"
#include "ppu/model_uom.hpp"
#include "ppu/noise.hpp"
#include "ppu/pipeline.hpp"

namespace ppu {

enum class Phase { uom, qe };

// Key-value config. Keys (one "key = value" per line, '#' comments):
//   phase            uom | qe
//   epochs, batch_size, patience, max_steps (0: unlimited)
//   learning_rate
//   target_metric    stop once the validation metric reaches this
//   upsample         hard-example factor f >= 1
//   noise_insert, noise_delete
//   attributes       short_text | all_text
//   use_categories   true | false
//   threshold        decode threshold in (0, 1)
//   val_share, test_share
//   seed
//   data, spans, output, uom_checkpoint   paths
//   uom.<field>, qe.<field>               model hyperparameters (JSON values)
struct TrainConfig {
  Phase phase = Phase::uom;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  std::size_t patience = 5;
  std::size_t max_steps = 0;
  double learning_rate = 1e-3;
  double target_metric = 1.0;
  double upsample = 1.0;
  NoiseConfig noise{0.05, 0.05};
  bool short_text = true;
  bool use_categories = true;
  double threshold = 0.5;
  double val_share = 0.1;
  double test_share = 0.1;
  std::uint64_t seed = 1;
  std::string data, spans, output, uom_checkpoint;
  UoMClassifierConfig uom_model;
  QEConfig qe_model;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  // Applies one key; throws DataError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  std::string to_text() const;

  UoMClassifierConfig classifier_config() const;
  QEConfig extractor_config() const;
};

TrainConfig parse_train_config(std::string_view text);
TrainConfig load_train_config(const std::filesystem::path& path);

struct DataSplit {
  std::vector<std::size_t> train, validation, test;
};

// Stratified by (gold UoM, span count); records without a gold UoM go to
// train. `spans` supplies span counts (missing ids count as 0).
DataSplit stratified_split(const std::vector<ProductRecord>& records, const SpanMap* spans, double val_share,
                           double test_share, std::uint64_t seed);

std::vector<ProductRecord> select(const std::vector<ProductRecord>& records, const std::vector<std::size_t>& idx);

// Tagger labels on titles for every labeled record that qualifies.
SpanMap tag_dataset(const std::vector<ProductRecord>& records, const UnitLexicon& lexicon = UnitLexicon::standard());

struct ClassMetrics {
  std::size_t support = 0;    // gold records of the class
  std::size_t predicted = 0;  // predictions of the class
  std::size_t correct = 0;
  double precision = 0, recall = 0, f1 = 0;
};

struct EvalReport {
  std::string mode;  // uom | extraction
  std::size_t records = 0;
  std::array<ClassMetrics, 3> per_uom{};  // weight, volume, count
  double micro_f1 = 0;                    // == accuracy over single-label predictions
  double macro_f1 = 0;                    // over classes with support or predictions

  // Extraction: a prediction is strictly correct when UoM and total match.
  std::size_t predictions = 0;  // non-abstained
  std::size_t strict_correct = 0;
  double strict_precision = 0, strict_recall = 0, strict_f1 = 0;
  double abstention_rate = 0;
  bool zero_support = false;  // no predictions: precision reported as 1

  // Weight and volume pooled.
  double measure_recall() const;

  nlohmann::ordered_json to_json() const;
  std::string to_csv() const;
};

// Metrics from predictions aligned with `gold` (same length). Records
// without gold labels are skipped. In uom mode only the classifier output is
// scored; extraction mode scores both.
EvalReport score_predictions(const std::vector<Prediction>& predictions, const std::vector<ProductRecord>& gold,
                             const std::string& mode, const UnitLexicon& lexicon = UnitLexicon::standard());

EvalReport evaluate_uom(const UoMClassifier& classifier, const std::vector<ProductRecord>& records);
EvalReport evaluate_extraction(const Pipeline& pipeline, const std::vector<ProductRecord>& records,
                               std::size_t threads = 1);
EvalReport evaluate_baseline(const std::vector<ProductRecord>& records,
                             const UnitLexicon& lexicon = UnitLexicon::standard());

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0;
  double validation_metric = 0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;  // 1-based, 0 when never validated
  double best_metric = 0;
  std::size_t steps = 0;
};

struct UoMTrainResult {
  UoMClassifier model;
  TrainLog log;
};

// Adam on per-example cross-entropy averaged over each batch; epochs come
// from the hard-example sampler; early stopping on validation macro-F1 keeps
// the best parameters. Throws DataError if no training record has a gold UoM.
UoMTrainResult train_uom(const TrainConfig& config, const std::vector<ProductRecord>& train,
                         const std::vector<ProductRecord>& validation, std::ostream* log = nullptr);

struct QETrainResult {
  QuantityExtractor model;
  TrainLog log;
  std::size_t used = 0;     // training records with span labels
  std::size_t dropped = 0;  // training records without (unqualifiable)
};

// The classifier supplies conditioning probabilities and is never modified
// (checked by fingerprint). Training records missing from `spans` are
// dropped. Early stopping on validation strict F1, or on `selection` when
// given (called once per epoch). Throws DataError if `spans` is empty while
// `train` is not.
using SelectionMetric = std::function<double(const QuantityExtractor&)>;
QETrainResult train_qe(const TrainConfig& config, const UoMClassifier& classifier,
                       const std::vector<ProductRecord>& train, const SpanMap& spans,
                       const std::vector<ProductRecord>& validation, std::ostream* log = nullptr,
                       const SelectionMetric& selection = {});

struct AblationCell {
  std::string name;
  TrainConfig config;
};

struct AblationRow {
  std::string name;
  EvalReport held_out;
  EvalReport hard;  // records with ambiguity 1
};

// Classifier ablation: trains each cell on `train`/`validation` with its own
// config and seed, scores it on `test` and on the hard slice of `test`.
std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& grid, const std::vector<ProductRecord>& train,
                                      const std::vector<ProductRecord>& validation,
                                      const std::vector<ProductRecord>& test, std::ostream* log = nullptr);
std::string ablation_csv(const std::vector<AblationRow>& rows);

struct ThresholdPoint {
  double threshold = 0;
  EvalReport report;
};

// Extraction metrics over a grid of decode thresholds.
std::vector<ThresholdPoint> threshold_sweep(const Pipeline& pipeline, const std::vector<ProductRecord>& records,
                                            const std::vector<double>& thresholds);

}  // namespace ppu
