#include "ppu/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "ppu/text.hpp"

namespace ppu {

Pipeline::Pipeline(const UoMClassifier& classifier, const QuantityExtractor& extractor, PipelineOptions options,
                   const UnitLexicon& lexicon)
    : classifier_(&classifier), extractor_(&extractor), options_(options), lexicon_(&lexicon) {
  if (!(options_.threshold > 0 && options_.threshold < 1)) {
    throw std::invalid_argument("pipeline threshold must be in (0, 1)");
  }
}

Prediction Pipeline::predict(const ProductRecord& record) const { return predict(record, options_.threshold); }

Prediction Pipeline::predict(const ProductRecord& record, double threshold) const {
  Prediction p;
  p.id = record.id;
  p.uom = classifier_->predict(record);
  const UoMType uom = p.uom.predicted;

  for (const auto& name : extractor_->attribute_names(record)) {
    const std::string* text = record.attribute(name);
    if (!text || text->empty()) continue;
    const auto ids = extractor_->encode(name, *text);
    if (ids.empty()) continue;
    const SpanImage image = extractor_->span_image(ids, p.uom.probs);
    SpanFilter allowed;
    if (options_.candidate_filter) {
      allowed.emplace();
      for (const auto& c : find_candidates_in(name, *text, *lexicon_))
        if (c.end <= ids.size()) allowed->insert({c.start, c.end - 1});
    }
    auto decoded = decode_spans(image, *text, uom, threshold, allowed, *lexicon_);
    for (auto& s : decoded.spans) {
      s.attribute = name;
      p.spans.push_back(std::move(s));
    }
  }

  if (p.spans.empty()) {
    if (uom == UoMType::count) {
      p.kind = DecodeResult::Kind::quantity_one;
      p.total = TotalQuantity{1.0, "count", UoMType::count};
    } else {
      p.kind = DecodeResult::Kind::abstain;
    }
    return p;
  }
  p.kind = DecodeResult::Kind::spans;
  std::vector<TypedQuantity> typed;
  for (const auto& s : p.spans) {
    if (!s.value) {
      p.warnings.push_back("span " + std::to_string(s.start) + ":" + std::to_string(s.end) + " is not a numeral");
      continue;
    }
    typed.push_back({*s.value, s.cued_type, s.cued_type == UoMType::count ? std::string("count") : s.unit.value_or("")});
  }
  p.total = aggregate_total(typed, uom, *lexicon_, &p.warnings);
  if (!p.total) p.kind = DecodeResult::Kind::abstain;
  return p;
}

std::vector<Prediction> predict_all(const Pipeline& pipeline, const std::vector<ProductRecord>& records,
                                    std::size_t threads) {
  std::vector<Prediction> out(records.size());
  threads = std::max<std::size_t>(1, std::min(threads, records.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < records.size(); ++i) out[i] = pipeline.predict(records[i]);
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (records.size() + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      const std::size_t end = std::min(records.size(), (t + 1) * chunk);
      for (std::size_t i = t * chunk; i < end; ++i) out[i] = pipeline.predict(records[i]);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

Prediction baseline_predict(const ProductRecord& record, const UnitLexicon& lexicon, const RulesConfig& config) {
  Prediction p;
  p.id = record.id;
  p.uom.predicted = classify_uom_rules(record, lexicon, config);
  p.uom.probs[uom_index(p.uom.predicted)] = 1.0;
  p.uom.confidence = 1.0;
  const auto ex = extract_quantities_rules(record, lexicon, config);
  if (!ex) {
    p.kind = DecodeResult::Kind::abstain;
    return p;
  }
  p.kind = ex->used.empty() ? DecodeResult::Kind::quantity_one : DecodeResult::Kind::spans;
  for (const auto& c : ex->used) {
    DecodedSpan s;
    s.attribute = c.attribute;
    s.start = c.start;
    s.end = c.end;
    s.score = 1.0;
    s.value = c.value;
    s.cued_type = c.cued_type;
    s.unit = c.cue_unit;
    p.spans.push_back(std::move(s));
  }
  p.total = ex->total;
  return p;
}

nlohmann::ordered_json prediction_to_json(const Prediction& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["uom"] = std::string(to_string(p.uom.predicted));
  j["confidence"] = p.uom.confidence;
  j["probs"] = {{"weight", p.uom.probs[0]}, {"volume", p.uom.probs[1]}, {"count", p.uom.probs[2]}};
  auto spans = nlohmann::ordered_json::array();
  for (const auto& s : p.spans) {
    nlohmann::ordered_json js;
    js["attribute"] = s.attribute;
    js["start"] = s.start;
    js["end"] = s.end;
    js["score"] = s.score;
    js["value"] = s.value ? nlohmann::ordered_json(*s.value) : nlohmann::ordered_json(nullptr);
    spans.push_back(std::move(js));
  }
  j["spans"] = std::move(spans);
  if (p.total) {
    j["total"] = {{"value", p.total->value}, {"unit", p.total->unit}};
  } else {
    j["total"] = nullptr;
  }
  j["abstain"] = !p.total.has_value();
  return j;
}

std::string check_prediction_row(const nlohmann::json& row) {
  if (!row.is_object()) return "row is not an object";
  if (row.contains("error")) {
    if (!row.contains("line") || !row["line"].is_number_unsigned()) return "error row needs an unsigned line";
    if (!row["error"].is_string()) return "error must be a string";
    return row.size() == 2 ? "" : "error row has extra keys";
  }
  static const std::vector<std::string> keys{"id", "uom", "confidence", "probs", "spans", "total", "abstain"};
  if (row.size() != keys.size()) return "expected exactly " + std::to_string(keys.size()) + " keys";
  for (const auto& k : keys)
    if (!row.contains(k)) return "missing key '" + k + "'";
  if (!row["id"].is_string()) return "id must be a string";
  if (!row["uom"].is_string()) return "uom must be a string";
  try {
    parse_uom(row["uom"].get<std::string>());
  } catch (const std::invalid_argument&) {
    return "uom must be weight, volume or count";
  }
  auto unit_interval = [](const nlohmann::json& v) { return v.is_number() && v.get<double>() >= 0 && v.get<double>() <= 1; };
  if (!unit_interval(row["confidence"])) return "confidence must be a number in [0, 1]";
  const auto& probs = row["probs"];
  if (!probs.is_object() || probs.size() != 3) return "probs must have weight, volume and count";
  for (const char* k : {"weight", "volume", "count"})
    if (!probs.contains(k) || !unit_interval(probs[k])) return std::string("probs.") + k + " must be in [0, 1]";
  if (!row["spans"].is_array()) return "spans must be an array";
  for (const auto& s : row["spans"]) {
    if (!s.is_object() || s.size() != 5) return "span must have attribute, start, end, score, value";
    if (!s.contains("attribute") || !s["attribute"].is_string()) return "span attribute must be a string";
    if (!s.contains("start") || !s["start"].is_number_unsigned()) return "span start must be unsigned";
    if (!s.contains("end") || !s["end"].is_number_unsigned()) return "span end must be unsigned";
    if (s["end"].get<std::size_t>() <= s["start"].get<std::size_t>()) return "span end must exceed start";
    if (!s.contains("score") || !unit_interval(s["score"])) return "span score must be in [0, 1]";
    if (!s.contains("value") || !(s["value"].is_number() || s["value"].is_null())) return "span value must be a number or null";
  }
  if (!row["abstain"].is_boolean()) return "abstain must be a boolean";
  const auto& total = row["total"];
  if (total.is_null()) return row["abstain"].get<bool>() ? "" : "null total requires abstain";
  if (row["abstain"].get<bool>()) return "abstain row must have a null total";
  if (!total.is_object() || total.size() != 2) return "total must have value and unit";
  if (!total.contains("value") || !total["value"].is_number() || !(total["value"].get<double>() > 0))
    return "total value must be positive";
  if (!total.contains("unit") || !total["unit"].is_string()) return "total unit must be a string";
  return "";
}

nlohmann::ordered_json error_row(std::size_t line, const std::string& message) {
  nlohmann::ordered_json j;
  j["line"] = line;
  j["error"] = message;
  return j;
}

nlohmann::ordered_json BenchReport::to_json() const {
  nlohmann::ordered_json j;
  j["batch"] = batch;
  j["attributes"] = attributes;
  auto rows_j = nlohmann::ordered_json::array();
  for (const auto& r : rows)
    rows_j.push_back({{"threads", r.threads}, {"mean_ms", r.mean_ms}, {"p90_ms", r.p90_ms}, {"samples", r.samples}});
  j["rows"] = std::move(rows_j);
  return j;
}

double percentile90(std::vector<double> samples) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.9 * double(samples.size())));
  return samples[std::max<std::size_t>(rank, 1) - 1];
}

BenchReport bench(const Pipeline& pipeline, const std::vector<ProductRecord>& inputs, const BenchConfig& config) {
  if (config.iterations < 100) throw std::invalid_argument("bench needs at least 100 iterations");
  if (config.warmup < 10) throw std::invalid_argument("bench needs at least 10 warmup calls");
  if (inputs.empty()) throw std::invalid_argument("bench needs at least one input record");
  BenchReport report;
  report.attributes = pipeline.extractor().config().short_text && pipeline.classifier().config().short_text
                          ? "short_text"
                          : "all_text";
  for (std::size_t n : config.threads) {
    if (n == 0) throw std::invalid_argument("bench thread count must be positive");
    std::vector<std::vector<double>> per_worker(n);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n; ++w) {
      pool.emplace_back([&, w] {
        std::size_t k = w;
        for (std::size_t i = 0; i < config.warmup; ++i) pipeline.predict(inputs[k++ % inputs.size()]);
        auto& out = per_worker[w];
        out.reserve(config.iterations);
        for (std::size_t i = 0; i < config.iterations; ++i) {
          const auto t0 = std::chrono::steady_clock::now();
          pipeline.predict(inputs[k++ % inputs.size()]);
          const auto t1 = std::chrono::steady_clock::now();
          out.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
      });
    }
    for (auto& th : pool) th.join();
    std::vector<double> all;
    for (const auto& v : per_worker) all.insert(all.end(), v.begin(), v.end());
    BenchRow row;
    row.threads = n;
    row.samples = all.size();
    row.mean_ms = std::accumulate(all.begin(), all.end(), 0.0) / double(all.size());
    row.p90_ms = percentile90(all);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace ppu
