// ppuqa: command-line front end for synthesis, labeling, training,
// evaluation, prediction and latency benchmarking.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "ppu/analyze.hpp"
#include "ppu/checkpoint.hpp"
#include "ppu/errors.hpp"
#include "ppu/pipeline.hpp"
#include "ppu/rules.hpp"
#include "ppu/synthgen.hpp"
#include "ppu/train.hpp"

using namespace ppu;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kCheckpoint = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Empty path or "-" writes to stdout.
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << text;
}

std::string dump_line(const nlohmann::ordered_json& j) { return j.dump() + "\n"; }

UoMClassifier load_classifier(const std::string& path) {
  if (path.empty()) throw UsageError("--uom-checkpoint is required");
  return UoMClassifier(load_checkpoint(path));
}

QuantityExtractor load_extractor(const std::string& path, const UoMClassifier& classifier) {
  if (path.empty()) throw UsageError("--qe-checkpoint is required");
  const Checkpoint ck = load_checkpoint(path);
  const std::string expected = fingerprint_hex(classifier.params().fingerprint());
  const auto it = ck.hyperparameters.find("classifier");
  if (it == ck.hyperparameters.end() || !it->is_string() || it->get<std::string>() != expected) {
    throw CheckpointError("extractor was trained against classifier " +
                          (it != ck.hyperparameters.end() && it->is_string() ? it->get<std::string>() : "(unknown)") +
                          ", not " + expected);
  }
  return QuantityExtractor(ck);
}

struct Parsed {
  std::vector<ProductRecord> records;
  std::vector<std::pair<std::size_t, std::string>> errors;  // line, message
  std::vector<std::size_t> lines;                           // source line of each record
};

// Line-by-line parse that keeps going past bad lines.
Parsed parse_lines(const std::string& text) {
  Parsed out;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.records.push_back(record_from_json(nlohmann::ordered_json::parse(line)));
      out.lines.push_back(no);
    } catch (const std::exception& e) {
      out.errors.emplace_back(no, e.what());
    }
  }
  return out;
}

// Rows in input order with error rows interleaved; returns the text.
template <class PredictFn>
std::string prediction_rows(const Parsed& in, PredictFn predict) {
  std::string out;
  std::size_t e = 0;
  for (std::size_t i = 0; i < in.records.size(); ++i) {
    for (; e < in.errors.size() && in.errors[e].first < in.lines[i]; ++e)
      out += dump_line(error_row(in.errors[e].first, in.errors[e].second));
    const auto row = prediction_to_json(predict(in.records[i]));
    if (const auto err = check_prediction_row(row); !err.empty())
      throw std::logic_error("prediction row violates schema: " + err);
    out += dump_line(row);
  }
  for (; e < in.errors.size(); ++e) out += dump_line(error_row(in.errors[e].first, in.errors[e].second));
  return out;
}

void strip_to_title(std::vector<ProductRecord>& records) {
  for (auto& r : records) {
    std::erase_if(r.attributes, [](const auto& a) { return a.first != "title"; });
  }
}

struct Splits {
  std::vector<ProductRecord> train, validation, test;
  SpanMap spans;
};

Splits load_splits(const TrainConfig& cfg) {
  if (cfg.data.empty()) throw UsageError("training data path missing (config key data or --data)");
  const auto records = load_jsonl(cfg.data);
  Splits s;
  s.spans = cfg.spans.empty() ? tag_dataset(records) : load_span_sidecar(cfg.spans);
  // Splits are stratified on tagger spans so both phases see the same split.
  const SpanMap strat = tag_dataset(records);
  const auto d = stratified_split(records, &strat, cfg.val_share, cfg.test_share, cfg.seed);
  s.train = select(records, d.train);
  s.validation = select(records, d.validation);
  s.test = select(records, d.test);
  return s;
}

std::vector<std::size_t> parse_threads(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoul(part, &used);
      if (used != part.size() || v == 0) throw std::invalid_argument(part);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError("bad --threads entry '" + part + "'");
    }
  }
  if (out.empty()) throw UsageError("--threads needs at least one count");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantity and unit-of-measure extraction for product text"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic catalog (JSONL)");
  std::size_t synth_n = 1000;
  std::uint64_t synth_seed = 0;
  std::string synth_locale = "mixed", synth_out, synth_spans;
  double synth_share = 0.21;
  synth->add_option("--n", synth_n, "Number of records")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
  synth->add_option("--locale", synth_locale, "us, eu5, in or mixed")->capture_default_str();
  synth->add_option("--ambiguity-share", synth_share, "Share of hard records")->capture_default_str();
  synth->add_option("--out", synth_out, "Output JSONL (default stdout)");
  synth->add_option("--spans", synth_spans, "Also write generator spans to this sidecar");

  // tag
  auto* tag = app.add_subcommand("tag", "Label quantity spans with the tagger (span sidecar)");
  std::string tag_in, tag_out;
  tag->add_option("--in", tag_in, "Input JSONL")->required();
  tag->add_option("--out", tag_out, "Output sidecar (default stdout)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Ambiguity and span statistics");
  std::string an_in, an_spans, an_csv;
  analyze->add_option("--in", an_in, "Input JSONL")->required();
  analyze->add_option("--spans", an_spans, "Span sidecar (default: tagger spans)");
  analyze->add_option("--csv-prefix", an_csv, "Write <prefix>spans.csv and <prefix>categories.csv");

  // train-uom / train-qe
  auto* train_u = app.add_subcommand("train-uom", "Phase 1: train the UoM classifier");
  auto* train_q = app.add_subcommand("train-qe", "Phase 2: train the extractor on a frozen classifier");
  std::string tr_config, tr_data, tr_out, tr_uom_ckpt, tr_report;
  std::uint64_t tr_seed = 0;
  std::vector<CLI::Option*> seed_opts;
  for (auto* sc : {train_u, train_q}) {
    sc->add_option("--config", tr_config, "Key-value config file");
    sc->add_option("--data", tr_data, "Training JSONL (overrides config)");
    sc->add_option("--out", tr_out, "Checkpoint path (overrides config)");
    seed_opts.push_back(sc->add_option("--seed", tr_seed, "Seed (overrides config)"));
    sc->add_option("--report", tr_report, "Held-out report JSON path");
  }
  train_q->add_option("--uom-checkpoint", tr_uom_ckpt, "Frozen classifier checkpoint");

  // eval
  auto* eval = app.add_subcommand("eval", "Score checkpoints on labeled records");
  std::string ev_mode = "extraction", ev_in, ev_uom, ev_qe, ev_csv;
  double ev_threshold = 0.5;
  eval->add_option("--mode", ev_mode, "uom or extraction")->capture_default_str();
  eval->add_option("--in", ev_in, "Labeled JSONL")->required();
  eval->add_option("--uom-checkpoint", ev_uom, "Classifier checkpoint")->required();
  eval->add_option("--qe-checkpoint", ev_qe, "Extractor checkpoint (extraction mode)");
  eval->add_option("--threshold", ev_threshold, "Decode threshold")->capture_default_str();
  eval->add_option("--csv", ev_csv, "Also write the report as CSV");

  // predict
  auto* predict = app.add_subcommand("predict", "Predict UoM type and total quantity");
  std::string pr_in, pr_out, pr_uom, pr_qe;
  double pr_threshold = 0.5;
  bool pr_short = false;
  predict->add_option("--in", pr_in, "Input JSONL")->required();
  predict->add_option("--out", pr_out, "Output JSONL (default stdout)");
  predict->add_option("--uom-checkpoint", pr_uom, "Classifier checkpoint")->required();
  predict->add_option("--qe-checkpoint", pr_qe, "Extractor checkpoint")->required();
  predict->add_option("--threshold", pr_threshold, "Decode threshold")->capture_default_str();
  predict->add_flag("--short-text", pr_short, "Read titles only");

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Rule-based predictions in the predict schema");
  std::string bl_in, bl_out, bl_report;
  baseline->add_option("--in", bl_in, "Input JSONL")->required();
  baseline->add_option("--out", bl_out, "Output JSONL (default stdout)");
  baseline->add_option("--report", bl_report, "Report JSON path when gold labels are present (default stderr)");

  // bench
  auto* benchc = app.add_subcommand("bench", "Single-record latency with N parallel workers");
  std::string bn_in, bn_uom, bn_qe, bn_threads = "2,4,8";
  std::size_t bn_iters = 100, bn_warmup = 10;
  benchc->add_option("--in", bn_in, "Input JSONL")->required();
  benchc->add_option("--uom-checkpoint", bn_uom, "Classifier checkpoint")->required();
  benchc->add_option("--qe-checkpoint", bn_qe, "Extractor checkpoint")->required();
  benchc->add_option("--threads", bn_threads, "Comma-separated worker counts")->capture_default_str();
  benchc->add_option("--iters", bn_iters, "Timed calls per worker (>= 100)")->capture_default_str();
  benchc->add_option("--warmup", bn_warmup, "Untimed calls per worker (>= 10)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) {
      DatasetConfig cfg;
      cfg.n = synth_n;
      cfg.seed = synth_seed;
      cfg.ambiguity_share = synth_share;
      if (synth_locale != "mixed") cfg.locale = parse_locale(synth_locale);
      const auto data = generate_dataset(cfg);
      std::vector<ProductRecord> records;
      std::vector<std::pair<std::string, std::vector<GoldSpan>>> rows;
      for (const auto& e : data) {
        records.push_back(e.record);
        rows.emplace_back(e.record.id, e.spans);
      }
      emit(synth_out, to_jsonl(records));
      if (!synth_spans.empty()) write_span_sidecar(rows, synth_spans);
    } else if (*tag) {
      const auto records = load_jsonl(tag_in);
      const auto spans = tag_dataset(records);
      std::vector<std::pair<std::string, std::vector<GoldSpan>>> rows;
      for (const auto& r : records)
        if (auto it = spans.find(r.id); it != spans.end()) rows.emplace_back(r.id, it->second);
      emit(tag_out, span_sidecar_text(rows));
      std::cerr << "tagged " << rows.size() << " of " << records.size() << " records ("
                << (records.empty() ? 0.0 : 100.0 * double(records.size() - rows.size()) / double(records.size()))
                << "% unqualifiable)\n";
    } else if (*analyze) {
      const auto records = load_jsonl(an_in);
      SpanMap spans;
      if (!an_spans.empty()) spans = load_span_sidecar(an_spans);
      const auto st = dataset_stats(records, an_spans.empty() ? nullptr : &spans);
      std::cout << st.to_json().dump(2) << '\n';
      if (!an_csv.empty()) {
        emit(an_csv + "spans.csv", st.span_histogram_csv());
        emit(an_csv + "categories.csv", st.category_csv());
      }
    } else if (*train_u || *train_q) {
      TrainConfig cfg = tr_config.empty() ? TrainConfig{} : load_train_config(tr_config);
      cfg.phase = *train_u ? Phase::uom : Phase::qe;
      if (!tr_data.empty()) cfg.data = tr_data;
      if (!tr_out.empty()) cfg.output = tr_out;
      if (!tr_uom_ckpt.empty()) cfg.uom_checkpoint = tr_uom_ckpt;
      if (seed_opts[0]->count() || seed_opts[1]->count()) cfg.seed = tr_seed;
      try {
        cfg.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      if (cfg.output.empty()) throw UsageError("checkpoint path missing (config key output or --out)");
      const Splits s = load_splits(cfg);
      nlohmann::ordered_json report;
      if (*train_u) {
        const auto r = train_uom(cfg, s.train, s.validation, &std::cerr);
        save_checkpoint(r.model.to_checkpoint(), cfg.output);
        report["best_epoch"] = r.log.best_epoch;
        report["test"] = evaluate_uom(r.model, s.test).to_json();
      } else {
        const UoMClassifier classifier = load_classifier(cfg.uom_checkpoint);
        const auto r = train_qe(cfg, classifier, s.train, s.spans, s.validation, &std::cerr);
        save_checkpoint(r.model.to_checkpoint(classifier.params().fingerprint()), cfg.output);
        report["best_epoch"] = r.log.best_epoch;
        report["used"] = r.used;
        report["dropped"] = r.dropped;
        const Pipeline pipe(classifier, r.model, PipelineOptions{cfg.threshold, true});
        report["test"] = evaluate_extraction(pipe, s.test).to_json();
      }
      if (!tr_report.empty()) emit(tr_report, report.dump(2) + "\n");
    } else if (*eval) {
      if (ev_mode != "uom" && ev_mode != "extraction") throw UsageError("--mode must be uom or extraction");
      const auto records = load_jsonl(ev_in);
      const UoMClassifier classifier = load_classifier(ev_uom);
      EvalReport rep;
      if (ev_mode == "uom") {
        rep = evaluate_uom(classifier, records);
      } else {
        const QuantityExtractor extractor = load_extractor(ev_qe, classifier);
        rep = evaluate_extraction(Pipeline(classifier, extractor, PipelineOptions{ev_threshold, true}), records);
      }
      std::cout << rep.to_json().dump(2) << '\n';
      if (!ev_csv.empty()) emit(ev_csv, rep.to_csv());
    } else if (*predict) {
      if (!(pr_threshold > 0 && pr_threshold < 1)) throw UsageError("--threshold must be in (0, 1)");
      const UoMClassifier classifier = load_classifier(pr_uom);
      const QuantityExtractor extractor = load_extractor(pr_qe, classifier);
      Parsed in = parse_lines(read_file(pr_in));
      if (pr_short) strip_to_title(in.records);
      const Pipeline pipe(classifier, extractor, PipelineOptions{pr_threshold, true});
      emit(pr_out, prediction_rows(in, [&](const ProductRecord& r) { return pipe.predict(r); }));
      if (!in.errors.empty()) return kData;
    } else if (*baseline) {
      const Parsed in = parse_lines(read_file(bl_in));
      emit(bl_out, prediction_rows(in, [](const ProductRecord& r) { return baseline_predict(r); }));
      const bool gold = std::any_of(in.records.begin(), in.records.end(),
                                    [](const ProductRecord& r) { return r.gold_uom && r.gold_total; });
      if (gold) {
        const std::string text = evaluate_baseline(in.records).to_json().dump(2) + "\n";
        if (bl_report.empty()) std::cerr << text;
        else emit(bl_report, text);
      }
      if (!in.errors.empty()) return kData;
    } else if (*benchc) {
      const UoMClassifier classifier = load_classifier(bn_uom);
      const QuantityExtractor extractor = load_extractor(bn_qe, classifier);
      const auto inputs = load_jsonl(bn_in);
      BenchConfig cfg;
      cfg.threads = parse_threads(bn_threads);
      cfg.iterations = bn_iters;
      cfg.warmup = bn_warmup;
      if (cfg.iterations < 100 || cfg.warmup < 10) throw UsageError("--iters must be >= 100 and --warmup >= 10");
      if (inputs.empty()) throw DataError("bench needs at least one input record");
      const auto rep = bench(Pipeline(classifier, extractor), inputs, cfg);
      std::cout << rep.to_json().dump(2) << '\n';
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kCheckpoint;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
