#include "ppu/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ppu/analyze.hpp"
#include "ppu/errors.hpp"
#include "ppu/optim.hpp"
#include "ppu/tagger.hpp"

namespace ppu {

using tensor::Real;
using tensor::Tensor;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw DataError("config key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    if (!v.empty() && v[0] != '-') out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw DataError("config key '" + key + "': expected a count, got '" + v + "'");
  return static_cast<std::size_t>(out);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw DataError("config key '" + key + "': expected true or false, got '" + v + "'");
}

template <class Config>
void set_model_field(Config& cfg, const std::string& key, const std::string& field, const std::string& value) {
  nlohmann::json j = cfg.to_json();
  if (!j.contains(field)) throw DataError("unknown config key '" + key + "'");
  nlohmann::json v = nlohmann::json::parse(value, nullptr, false);
  if (v.is_discarded()) v = value;
  j[field] = v;
  try {
    cfg = Config::from_json(j);
  } catch (const std::exception& e) {
    throw DataError("config key '" + key + "': " + e.what());
  }
}

Tensor probs_tensor(const std::array<double, 3>& p) {
  return Tensor::from({3}, {Real(p[0]), Real(p[1]), Real(p[2])});
}

double ratio(std::size_t a, std::size_t b) { return b ? double(a) / double(b) : 0.0; }

double harmonic(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

}  // namespace

// ---- config ------------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(upsample >= 1)) throw std::invalid_argument("upsample must be >= 1");
  if (noise.insert_prob < 0 || noise.insert_prob > 1 || noise.delete_prob < 0 || noise.delete_prob > 1)
    throw std::invalid_argument("noise probabilities must be in [0, 1]");
  if (!(threshold > 0 && threshold < 1)) throw std::invalid_argument("threshold must be in (0, 1)");
  if (val_share < 0 || test_share < 0 || val_share + test_share >= 1)
    throw std::invalid_argument("val_share and test_share must be >= 0 with a sum below 1");
  if (phase == Phase::qe && uom_checkpoint.empty())
    throw std::invalid_argument("phase qe needs uom_checkpoint");
  classifier_config().validate();
  extractor_config().validate();
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "phase") {
    if (value == "uom") phase = Phase::uom;
    else if (value == "qe") phase = Phase::qe;
    else throw DataError("config key 'phase': expected uom or qe, got '" + value + "'");
  } else if (key == "epochs") {
    epochs = parse_size(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_size(key, value);
  } else if (key == "patience") {
    patience = parse_size(key, value);
  } else if (key == "max_steps") {
    max_steps = parse_size(key, value);
  } else if (key == "learning_rate") {
    learning_rate = parse_double(key, value);
  } else if (key == "target_metric") {
    target_metric = parse_double(key, value);
  } else if (key == "upsample") {
    upsample = parse_double(key, value);
  } else if (key == "noise_insert") {
    noise.insert_prob = parse_double(key, value);
  } else if (key == "noise_delete") {
    noise.delete_prob = parse_double(key, value);
  } else if (key == "attributes") {
    if (value == "short_text") short_text = true;
    else if (value == "all_text") short_text = false;
    else throw DataError("config key 'attributes': expected short_text or all_text, got '" + value + "'");
  } else if (key == "use_categories") {
    use_categories = parse_bool(key, value);
  } else if (key == "threshold") {
    threshold = parse_double(key, value);
  } else if (key == "val_share") {
    val_share = parse_double(key, value);
  } else if (key == "test_share") {
    test_share = parse_double(key, value);
  } else if (key == "seed") {
    seed = parse_size(key, value);
  } else if (key == "data") {
    data = value;
  } else if (key == "spans") {
    spans = value;
  } else if (key == "output") {
    output = value;
  } else if (key == "uom_checkpoint") {
    uom_checkpoint = value;
  } else if (key.rfind("uom.", 0) == 0) {
    set_model_field(uom_model, key, key.substr(4), value);
  } else if (key.rfind("qe.", 0) == 0) {
    set_model_field(qe_model, key, key.substr(3), value);
  } else {
    throw DataError("unknown config key '" + key + "'");
  }
}

std::string TrainConfig::to_text() const {
  std::ostringstream s;
  s.precision(17);
  s << "phase = " << (phase == Phase::uom ? "uom" : "qe") << '\n'
    << "epochs = " << epochs << '\n'
    << "batch_size = " << batch_size << '\n'
    << "patience = " << patience << '\n'
    << "max_steps = " << max_steps << '\n'
    << "learning_rate = " << learning_rate << '\n'
    << "target_metric = " << target_metric << '\n'
    << "upsample = " << upsample << '\n'
    << "noise_insert = " << noise.insert_prob << '\n'
    << "noise_delete = " << noise.delete_prob << '\n'
    << "attributes = " << (short_text ? "short_text" : "all_text") << '\n'
    << "use_categories = " << (use_categories ? "true" : "false") << '\n'
    << "threshold = " << threshold << '\n'
    << "val_share = " << val_share << '\n'
    << "test_share = " << test_share << '\n'
    << "seed = " << seed << '\n';
  for (const auto* path : {&data, &spans, &output, &uom_checkpoint}) {
    if (path->empty()) continue;
    const char* name = path == &data ? "data" : path == &spans ? "spans" : path == &output ? "output" : "uom_checkpoint";
    s << name << " = " << *path << '\n';
  }
  const nlohmann::json uom_j = uom_model.to_json(), qe_j = qe_model.to_json();
  for (auto it = uom_j.begin(); it != uom_j.end(); ++it) s << "uom." << it.key() << " = " << it->dump() << '\n';
  for (auto it = qe_j.begin(); it != qe_j.end(); ++it) s << "qe." << it.key() << " = " << it->dump() << '\n';
  return s.str();
}

UoMClassifierConfig TrainConfig::classifier_config() const {
  auto c = uom_model;
  c.short_text = short_text;
  c.use_categories = use_categories;
  return c;
}

QEConfig TrainConfig::extractor_config() const {
  auto c = qe_model;
  c.short_text = short_text;
  return c;
}

TrainConfig parse_train_config(std::string_view text) {
  TrainConfig cfg;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
    try {
      cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const DataError& e) {
      throw DataError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_train_config(ss.str());
}

// ---- data --------------------------------------------------------------------

DataSplit stratified_split(const std::vector<ProductRecord>& records, const SpanMap* spans, double val_share,
                           double test_share, std::uint64_t seed) {
  if (val_share < 0 || test_share < 0 || val_share + test_share > 1)
    throw std::invalid_argument("split shares must be >= 0 and sum to at most 1");
  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  DataSplit out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.gold_uom) {
      out.train.push_back(i);
      continue;
    }
    int count = 0;
    if (spans) {
      if (auto it = spans->find(r.id); it != spans->end()) count = static_cast<int>(it->second.size());
    }
    strata[{uom_index(*r.gold_uom), std::min(count, 3)}].push_back(i);
  }
  std::mt19937_64 rng(seed);
  for (auto& [key, idx] : strata) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n = idx.size();
    const auto n_test = std::min(n, static_cast<std::size_t>(std::llround(test_share * double(n))));
    const auto n_val = std::min(n - n_test, static_cast<std::size_t>(std::llround(val_share * double(n))));
    out.test.insert(out.test.end(), idx.begin(), idx.begin() + long(n_test));
    out.validation.insert(out.validation.end(), idx.begin() + long(n_test), idx.begin() + long(n_test + n_val));
    out.train.insert(out.train.end(), idx.begin() + long(n_test + n_val), idx.end());
  }
  for (auto* v : {&out.train, &out.validation, &out.test}) std::sort(v->begin(), v->end());
  return out;
}

std::vector<ProductRecord> select(const std::vector<ProductRecord>& records, const std::vector<std::size_t>& idx) {
  std::vector<ProductRecord> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(records.at(i));
  return out;
}

SpanMap tag_dataset(const std::vector<ProductRecord>& records, const UnitLexicon& lexicon) {
  SpanMap out;
  for (const auto& r : records)
    if (auto spans = tag_record(r, lexicon)) out[r.id] = std::move(*spans);
  return out;
}

// ---- metrics -----------------------------------------------------------------

double EvalReport::measure_recall() const {
  return ratio(per_uom[0].correct + per_uom[1].correct, per_uom[0].support + per_uom[1].support);
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["mode"] = mode;
  j["records"] = records;
  nlohmann::ordered_json per;
  for (UoMType t : kAllUoMTypes) {
    const auto& m = per_uom[uom_index(t)];
    per[std::string(to_string(t))] = {{"support", m.support},     {"predicted", m.predicted}, {"correct", m.correct},
                                      {"precision", m.precision}, {"recall", m.recall},       {"f1", m.f1}};
  }
  j["per_uom"] = per;
  j["micro_f1"] = micro_f1;
  j["macro_f1"] = macro_f1;
  if (mode == "extraction") {
    j["predictions"] = predictions;
    j["strict_correct"] = strict_correct;
    j["strict_precision"] = strict_precision;
    j["strict_recall"] = strict_recall;
    j["strict_f1"] = strict_f1;
    j["abstention_rate"] = abstention_rate;
    j["zero_support"] = zero_support;
  }
  return j;
}

std::string EvalReport::to_csv() const {
  std::ostringstream s;
  s << "scope,precision,recall,f1,support\n";
  for (UoMType t : kAllUoMTypes) {
    const auto& m = per_uom[uom_index(t)];
    s << to_string(t) << ',' << m.precision << ',' << m.recall << ',' << m.f1 << ',' << m.support << '\n';
  }
  s << "micro," << micro_f1 << ',' << micro_f1 << ',' << micro_f1 << ',' << records << '\n';
  s << "macro,,," << macro_f1 << ',' << records << '\n';
  if (mode == "extraction")
    s << "strict," << strict_precision << ',' << strict_recall << ',' << strict_f1 << ',' << records << '\n';
  return s.str();
}

EvalReport score_predictions(const std::vector<Prediction>& predictions, const std::vector<ProductRecord>& gold,
                             const std::string& mode, const UnitLexicon& lexicon) {
  if (mode != "uom" && mode != "extraction") throw std::invalid_argument("evaluation mode must be uom or extraction");
  if (predictions.size() != gold.size())
    throw std::invalid_argument("score_predictions: predictions and gold differ in length");
  const bool extraction = mode == "extraction";
  EvalReport rep;
  rep.mode = mode;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold[i];
    const auto& p = predictions[i];
    if (!g.gold_uom || (extraction && !g.gold_total)) continue;
    ++rep.records;
    const int gi = uom_index(*g.gold_uom), pi = uom_index(p.uom.predicted);
    ++rep.per_uom[gi].support;
    ++rep.per_uom[pi].predicted;
    if (gi == pi) {
      ++rep.per_uom[gi].correct;
      ++correct;
    }
    if (extraction && p.total) {
      ++rep.predictions;
      if (gi == pi && totals_match(*p.total, *g.gold_uom, *g.gold_total, lexicon)) ++rep.strict_correct;
    }
  }
  double macro = 0;
  int classes = 0;
  for (auto& m : rep.per_uom) {
    m.precision = ratio(m.correct, m.predicted);
    m.recall = ratio(m.correct, m.support);
    m.f1 = harmonic(m.precision, m.recall);
    if (m.support || m.predicted) {
      macro += m.f1;
      ++classes;
    }
  }
  rep.macro_f1 = classes ? macro / classes : 0.0;
  rep.micro_f1 = ratio(correct, rep.records);
  if (extraction) {
    rep.zero_support = rep.predictions == 0;
    rep.strict_precision = rep.zero_support ? 1.0 : ratio(rep.strict_correct, rep.predictions);
    rep.strict_recall = ratio(rep.strict_correct, rep.records);
    rep.strict_f1 = harmonic(rep.strict_precision, rep.strict_recall);
    rep.abstention_rate = ratio(rep.records - rep.predictions, rep.records);
  }
  return rep;
}

EvalReport evaluate_uom(const UoMClassifier& classifier, const std::vector<ProductRecord>& records) {
  std::vector<Prediction> preds(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    preds[i].id = records[i].id;
    preds[i].uom = classifier.predict(records[i]);
  }
  return score_predictions(preds, records, "uom");
}

EvalReport evaluate_extraction(const Pipeline& pipeline, const std::vector<ProductRecord>& records,
                               std::size_t threads) {
  return score_predictions(predict_all(pipeline, records, threads), records, "extraction");
}

EvalReport evaluate_baseline(const std::vector<ProductRecord>& records, const UnitLexicon& lexicon) {
  std::vector<Prediction> preds;
  preds.reserve(records.size());
  for (const auto& r : records) preds.push_back(baseline_predict(r, lexicon));
  return score_predictions(preds, records, "extraction", lexicon);
}

// ---- training ----------------------------------------------------------------

namespace {

// Shared epoch/batch/early-stopping loop. `step_example` builds and
// backpropagates the loss of one example scaled by 1/batch and returns the
// unscaled loss; `validate` returns the selection metric.
template <class StepFn, class ValidateFn>
TrainLog run_training(const TrainConfig& cfg, ParamStore& params, UpsampleSampler& sampler, StepFn step_example,
                      ValidateFn validate, bool has_validation, std::ostream* log) {
  TrainLog out;
  tensor::OptimizerState opt;
  opt.config.learning_rate = cfg.learning_rate;
  params.set_requires_grad(true);
  auto leaves = params.tensors();
  ParamStore best;
  bool have_best = false;
  bool stop = false;
  for (std::size_t epoch = 1; epoch <= cfg.epochs && !stop; ++epoch) {
    const auto order = sampler.next_epoch();
    double loss_sum = 0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < order.size() && !stop; b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      params.zero_grad();
      const Real inv = Real(1.0 / double(e - b));
      for (std::size_t k = b; k < e; ++k) {
        loss_sum += step_example(order[k], inv);
        ++seen;
      }
      tensor::adam_step(leaves, opt);
      ++out.steps;
      if (cfg.max_steps && out.steps >= cfg.max_steps) stop = true;
    }
    EpochLog el;
    el.epoch = epoch;
    el.train_loss = seen ? loss_sum / double(seen) : 0.0;
    if (has_validation) {
      el.validation_metric = validate();
      if (!have_best || el.validation_metric > out.best_metric) {
        out.best_metric = el.validation_metric;
        out.best_epoch = epoch;
        best = params.clone();
        have_best = true;
      }
      if (out.best_metric >= cfg.target_metric) stop = true;
      if (epoch - out.best_epoch >= cfg.patience) stop = true;
    }
    if (log) {
      *log << "epoch " << epoch << " loss " << el.train_loss;
      if (has_validation) *log << " validation " << el.validation_metric;
      *log << '\n';
    }
    out.epochs.push_back(el);
  }
  params.zero_grad();
  if (have_best) params = std::move(best);
  params.set_requires_grad(false);
  return out;
}

}  // namespace

UoMTrainResult train_uom(const TrainConfig& config, const std::vector<ProductRecord>& train,
                         const std::vector<ProductRecord>& validation, std::ostream* log) {
  config.validate();
  const auto& lexicon = UnitLexicon::standard();
  std::vector<const ProductRecord*> usable;
  for (const auto& r : train)
    if (r.gold_uom) usable.push_back(&r);
  if (usable.empty()) throw DataError("train_uom: no training record has a gold UoM type");

  std::vector<ProductRecord> labeled;
  for (const auto* r : usable) labeled.push_back(*r);
  UoMClassifier model(config.classifier_config(), CategoryVocab::build(labeled), config.seed);

  // Tagger spans only guard unit cues from the noise.
  std::vector<std::vector<GoldSpan>> guard(usable.size());
  std::vector<bool> hard(usable.size());
  for (std::size_t i = 0; i < usable.size(); ++i) {
    guard[i] = tag_record(*usable[i], lexicon).value_or(std::vector<GoldSpan>{});
    hard[i] = record_ambiguity(*usable[i]) == 1;
  }
  UpsampleSampler sampler(hard, config.upsample, config.seed + 1);
  std::mt19937_64 rng(config.seed + 2);

  auto step = [&](std::size_t i, Real inv) {
    const auto noised = noise_text(*usable[i], guard[i], config.noise, rng);
    const UoMInput in = model.prepare(noised.record);
    const std::vector<int> target{uom_index(*usable[i]->gold_uom)};
    Tensor loss = tensor::cross_entropy(tensor::reshape(model.forward(in, true, &rng), {1, 3}), target);
    tensor::scale(loss, inv).backward();
    return double(loss.item());
  };
  auto validate = [&] { return evaluate_uom(model, validation).macro_f1; };
  TrainLog tl = run_training(config, model.params(), sampler, step, validate, !validation.empty(), log);
  return {std::move(model), std::move(tl)};
}

QETrainResult train_qe(const TrainConfig& config, const UoMClassifier& classifier,
                       const std::vector<ProductRecord>& train, const SpanMap& spans,
                       const std::vector<ProductRecord>& validation, std::ostream* log,
                       const SelectionMetric& selection) {
  {
    TrainConfig c = config;
    if (c.uom_checkpoint.empty()) c.uom_checkpoint = "(in memory)";
    c.validate();
  }
  if (spans.empty() && !train.empty()) throw DataError("train_qe: no span labels supplied");
  const std::uint64_t frozen = classifier.params().fingerprint();

  std::vector<const ProductRecord*> usable;
  std::vector<const std::vector<GoldSpan>*> labels;
  std::size_t dropped = 0;
  for (const auto& r : train) {
    auto it = spans.find(r.id);
    if (it == spans.end() || !r.gold_uom) {
      ++dropped;
      continue;
    }
    usable.push_back(&r);
    labels.push_back(&it->second);
  }
  if (log) {
    *log << "extraction set: " << usable.size() << " of " << train.size() << " records ("
         << 100.0 * ratio(dropped, train.size()) << "% smaller, unqualifiable dropped)\n";
  }
  if (usable.empty()) throw DataError("train_qe: no training record has span labels");

  QuantityExtractor model(config.extractor_config(), config.seed);
  std::vector<bool> hard(usable.size());
  for (std::size_t i = 0; i < usable.size(); ++i) hard[i] = record_ambiguity(*usable[i]) == 1;
  UpsampleSampler sampler(hard, config.upsample, config.seed + 1);
  std::mt19937_64 rng(config.seed + 2);
  const double cap = model.config().positive_weight_cap;

  auto step = [&](std::size_t i, Real inv) {
    const auto noised = noise_text(*usable[i], *labels[i], config.noise, rng);
    const Tensor probs = probs_tensor(classifier.predict(noised.record).probs);
    double total = 0;
    for (const auto& name : model.attribute_names(noised.record)) {
      const std::string* text = noised.record.attribute(name);
      if (!text) continue;
      const auto ids = model.encode(name, *text);
      if (ids.empty()) continue;
      std::vector<std::pair<std::size_t, std::size_t>> gold;
      for (const auto& s : noised.spans)
        if (s.attribute == name && s.end <= ids.size()) gold.emplace_back(s.start, s.end);
      Tensor loss = qe_loss(model.forward(ids, probs, true, &rng), gold, cap);
      tensor::scale(loss, inv).backward();
      total += loss.item();
    }
    return total;
  };
  auto validate = [&] {
    if (selection) return selection(model);
    const Pipeline pipe(classifier, model, PipelineOptions{config.threshold, true});
    return evaluate_extraction(pipe, validation).strict_f1;
  };
  TrainLog tl =
      run_training(config, model.params(), sampler, step, validate, selection || !validation.empty(), log);
  if (classifier.params().fingerprint() != frozen) throw std::logic_error("train_qe: classifier weights changed");
  return {std::move(model), std::move(tl), usable.size(), dropped};
}

// ---- ablation and calibration --------------------------------------------------

std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& grid, const std::vector<ProductRecord>& train,
                                      const std::vector<ProductRecord>& validation,
                                      const std::vector<ProductRecord>& test, std::ostream* log) {
  std::vector<ProductRecord> hard;
  for (const auto& r : test)
    if (record_ambiguity(r) == 1) hard.push_back(r);
  std::vector<AblationRow> rows;
  for (const auto& cell : grid) {
    if (log) *log << "ablation cell " << cell.name << '\n';
    const auto result = train_uom(cell.config, train, validation, log);
    rows.push_back({cell.name, evaluate_uom(result.model, test), evaluate_uom(result.model, hard)});
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream s;
  s << "config,macro_f1,micro_f1,measure_recall,hard_micro_f1,hard_macro_f1,hard_records\n";
  for (const auto& r : rows) {
    s << r.name << ',' << r.held_out.macro_f1 << ',' << r.held_out.micro_f1 << ',' << r.held_out.measure_recall() << ','
      << r.hard.micro_f1 << ',' << r.hard.macro_f1 << ',' << r.hard.records << '\n';
  }
  return s.str();
}

std::vector<ThresholdPoint> threshold_sweep(const Pipeline& pipeline, const std::vector<ProductRecord>& records,
                                            const std::vector<double>& thresholds) {
  std::vector<ThresholdPoint> out;
  for (double t : thresholds) {
    std::vector<Prediction> preds;
    preds.reserve(records.size());
    for (const auto& r : records) preds.push_back(pipeline.predict(r, t));
    out.push_back({t, score_predictions(preds, records, "extraction")});
  }
  return out;
}

}  // namespace ppu
