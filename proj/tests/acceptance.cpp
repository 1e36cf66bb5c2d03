// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "ppu/aggregate.hpp"
#include "ppu/analyze.hpp"
#include "ppu/checkpoint.hpp"
#include "ppu/model_qe.hpp"
#include "ppu/model_uom.hpp"
#include "ppu/pipeline.hpp"
#include "ppu/synthgen.hpp"
#include "ppu/tagger.hpp"
#include "ppu/text.hpp"
#include "ppu/train.hpp"
#include "ppu/vocab.hpp"
#include "worked_titles.hpp"
#include "tagger_oracle.hpp"

namespace fs = std::filesystem;
using namespace ppu;

namespace {

// Pinned bars.
constexpr double kGradcheckSeconds = 60.0;
constexpr int kOracleInstances = 1000;
constexpr double kNormTolerance = 1e-6;
constexpr std::size_t kDeskRecords = 5000;
constexpr std::uint64_t kDeskSeed = 7;
constexpr std::uint64_t kSplitSeed = 11;
constexpr std::size_t kQeEpochs = 8;
constexpr double kMacroF1Bar = 0.95;
constexpr double kStrictAccuracyBar = 0.85;
constexpr double kDeskSeconds = 600.0;
constexpr double kLatencyBarMs = 50.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << "criterion " << id << " " << name << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << "; "
            << std::fixed << std::setprecision(1) << seconds_since(t0) << " s)" << std::endl;
  std::cout.unsetf(std::ios::fixed);
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("ppu_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::vector<ProductRecord> records_of(const std::vector<SyntheticExample>& xs) {
  std::vector<ProductRecord> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.record);
  return out;
}

std::vector<ProductRecord> hard_slice(const std::vector<ProductRecord>& records) {
  std::vector<ProductRecord> out;
  for (const auto& r : records)
    if (record_ambiguity(r) == 1) out.push_back(r);
  return out;
}

// ---- 1 ---------------------------------------------------------------------

Outcome gradients() {
  const auto t0 = Clock::now();
  const std::string cmd = std::string(GRADCHECK_PATH) + " > " + (workdir() / "gradcheck.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  const double secs = seconds_since(t0);
  const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
  std::string detail = "op and subnetwork finite differences at 1e-3 in double precision, " + fmt(secs, 3) + " s";
  if (!ok) {
    const std::string log = slurp(workdir() / "gradcheck.txt");
    detail += "; log tail: " + log.substr(log.size() > 400 ? log.size() - 400 : 0);
  }
  return {ok && secs < kGradcheckSeconds, detail};
}

// ---- 2 ---------------------------------------------------------------------

Outcome table_one() {
  const auto& lex = UnitLexicon::standard();
  std::vector<std::string> got;
  bool ok = true;
  for (std::size_t i = 0; i < worked_titles::rows().size(); ++i) {
    const auto& row = worked_titles::rows()[i];
    const auto rec = worked_titles::record(i);
    std::vector<TypedQuantity> typed;
    if (i == 2) {
      // Tagger-qualified spans rather than the highlighted total.
      const auto q = qualify_spans(find_candidates(rec, lex), row.total, row.uom, lex);
      std::vector<double> values;
      for (const auto& c : q.spans) {
        typed.push_back(typed_from_candidate(c));
        values.push_back(c.value);
      }
      ok = ok && values == std::vector<double>{60, 2};
    } else {
      const auto cands = find_candidates_in("title", row.title, lex);
      for (const auto& numeral : row.gold_numerals) {
        const auto it = std::find_if(cands.begin(), cands.end(), [&](const CandidateQuantity& c) {
          return utf8_encode(utf8_decode(row.title).substr(c.start, c.end - c.start)) == numeral;
        });
        if (it == cands.end()) return {false, "row " + std::to_string(i + 1) + ": numeral " + numeral + " not found"};
        typed.push_back(typed_from_candidate(*it));
      }
    }
    const auto total = aggregate_total(typed, row.uom, lex);
    // g and gm are the same unit, so compare exactly in base units.
    const auto want = to_base_units(row.total.value, row.total.unit, row.uom, lex);
    const auto have = total ? to_base_units(total->value, total->unit, row.uom, lex) : std::nullopt;
    const bool exact = total && total->uom == row.uom && want && have && *want == *have;
    ok = ok && exact;
    got.push_back(total ? fmt(total->value) + " " + total->unit : "none");
  }
  std::string detail;
  for (const auto& g : got) detail += (detail.empty() ? "" : "; ") + g;
  return {ok, detail};
}

// ---- 3 ---------------------------------------------------------------------

Outcome tagger_oracle_check() {
  const auto& lex = UnitLexicon::standard();
  std::mt19937_64 rng(2024);
  int mismatches = 0, qualified = 0;
  for (int t = 0; t < kOracleInstances; ++t) {
    const auto inst = tagger_oracle::random_instance(rng);
    const auto got = qualify_spans(inst.candidates, inst.total, inst.uom, lex);
    const auto all = tagger_oracle::all_qualifying(inst.candidates, inst.total, inst.uom);
    // A count of 1 is the empty product and needs no span.
    const bool empty_product = inst.uom == UoMType::count && inst.total.value == 1;
    if (!got.spans.empty()) {
      ++qualified;
      if (!tagger_oracle::satisfies(got.spans, inst.total, inst.uom)) ++mismatches;
    } else if (got.qualified && !empty_product) {
      ++mismatches;
    }
    if (got.qualified != (!all.empty() || empty_product)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(kOracleInstances) + " instances, " + std::to_string(qualified) +
                               " with spans, " + std::to_string(mismatches) + " disagreements"};
}

// ---- 4 ---------------------------------------------------------------------

SpanImage random_image(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0, 1);
  SpanImage img;
  img.n = n;
  img.scores.resize(n * n * 2);
  for (std::size_t p = 0; p < n * n; ++p) {
    float s = u(rng);
    s = s * s * s;
    img.scores[p * 2 + 1] = s;
    img.scores[p * 2] = 1 - s;
  }
  return img;
}

Outcome span_images() {
  // Normalisation on real forward passes of an untrained extractor.
  QuantityExtractor qe(QEConfig{}, 3);
  double worst = 0;
  std::size_t pixels = 0;
  for (std::size_t i = 0; i < worked_titles::rows().size(); ++i) {
    const auto ids = qe.encode("title", worked_titles::rows()[i].title);
    const auto img = qe.span_image(ids, {0.2, 0.3, 0.5});
    for (std::size_t p = 0; p < img.n * img.n; ++p) {
      worst = std::max(worst, std::abs(static_cast<double>(img.scores[p * 2]) + img.scores[p * 2 + 1] - 1.0));
      ++pixels;
    }
  }
  const bool normalised = worst <= kNormTolerance;

  // Monotonicity and non-overlap on random images.
  std::mt19937_64 rng(99);
  const std::vector<double> thresholds{0.05, 0.1, 0.2, 0.35, 0.5, 0.7, 0.9};
  int violations = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto img = random_image(1 + trial % 40, rng);
    std::vector<std::pair<std::size_t, std::size_t>> prev;
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      const auto spans = select_spans(img, thresholds[k]);
      std::vector<std::pair<std::size_t, std::size_t>> cur;
      for (std::size_t a = 0; a < spans.size(); ++a) {
        for (std::size_t b = a + 1; b < spans.size(); ++b)
          if (!(spans[a].end <= spans[b].start || spans[b].end <= spans[a].start)) ++violations;
        cur.emplace_back(spans[a].start, spans[a].end);
      }
      if (k > 0)
        for (const auto& s : cur)
          if (std::find(prev.begin(), prev.end(), s) == prev.end()) ++violations;
      prev = cur;
    }
  }

  // Branch fixtures: nothing above threshold.
  const std::string text = "Dish Soap 3 x 500 ml";
  SpanImage flat;
  flat.n = 20;
  flat.scores.assign(20 * 20 * 2, 0);
  for (std::size_t p = 0; p < 400; ++p) flat.scores[p * 2] = 0.9f, flat.scores[p * 2 + 1] = 0.1f;
  const bool count_default = decode_spans(flat, text, UoMType::count, 0.5).kind == DecodeResult::Kind::quantity_one;
  const bool abstains = decode_spans(flat, text, UoMType::weight, 0.5).kind == DecodeResult::Kind::abstain &&
                        decode_spans(flat, text, UoMType::volume, 0.5).kind == DecodeResult::Kind::abstain;
  flat.scores[(14 * 20 + 16) * 2 + 1] = 0.9f;
  flat.scores[(14 * 20 + 16) * 2] = 0.1f;
  const auto one = decode_spans(flat, text, UoMType::volume, 0.5);
  const bool decodes = one.kind == DecodeResult::Kind::spans && one.spans.size() == 1 && one.spans[0].value == 500.0;

  return {normalised && violations == 0 && count_default && abstains && decodes,
          "max |sum - 1| " + fmt(worst, 3) + " over " + std::to_string(pixels) + " pixels; " +
              std::to_string(violations) + " monotonicity/overlap violations; count default " +
              (count_default ? "ok" : "wrong") + ", abstain " + (abstains ? "ok" : "wrong")};
}

// ---- 5, 6, 7, 9 -------------------------------------------------------------

struct Desk {
  std::vector<ProductRecord> train, validation, test;
  SpanMap spans;
  std::optional<UoMClassifier> classifier;
  std::optional<QuantityExtractor> extractor;
  EvalReport uom_report, extraction_report;
  double seconds = 0;
  bool frozen = false;
  std::string frozen_detail;
};

Desk& desk() {
  static Desk d;
  return d;
}

Outcome desk_training() {
  auto& d = desk();
  const auto t0 = Clock::now();
  DatasetConfig dc;
  dc.n = kDeskRecords;
  dc.seed = kDeskSeed;
  const auto records = records_of(generate_dataset(dc));
  d.spans = tag_dataset(records);
  const auto split = stratified_split(records, &d.spans, 0.1, 0.1, kSplitSeed);
  d.train = select(records, split.train);
  d.validation = select(records, split.validation);
  d.test = select(records, split.test);

  TrainConfig uc;
  auto u = train_uom(uc, d.train, d.validation);
  d.classifier.emplace(std::move(u.model));
  d.uom_report = evaluate_uom(*d.classifier, d.test);

  // Freeze check around phase two: the saved classifier file must not change.
  const fs::path before = workdir() / "uom_before.ckpt", after = workdir() / "uom_after.ckpt";
  save_checkpoint(d.classifier->to_checkpoint(), before);
  const std::string bytes_before = slurp(before);

  TrainConfig qc;
  qc.phase = Phase::qe;
  qc.epochs = kQeEpochs;
  std::ostringstream qlog;
  auto q = train_qe(qc, *d.classifier, d.train, d.spans, d.validation, &qlog);
  d.extractor.emplace(std::move(q.model));

  save_checkpoint(d.classifier->to_checkpoint(), after);
  const std::string bytes_after = slurp(after);
  const auto h = std::hash<std::string>{};
  d.frozen = bytes_before == bytes_after && slurp(before) == bytes_before;
  std::ostringstream hex;
  hex << std::hex << h(bytes_before) << " -> " << h(bytes_after);
  d.frozen_detail = "checkpoint hash " + hex.str() + ", " + std::to_string(bytes_after.size()) + " bytes";

  Pipeline p(*d.classifier, *d.extractor);
  d.extraction_report = evaluate_extraction(p, d.test);
  d.seconds = seconds_since(t0);

  const bool ok = d.uom_report.macro_f1 >= kMacroF1Bar && d.extraction_report.strict_recall >= kStrictAccuracyBar &&
                  d.seconds <= kDeskSeconds;
  return {ok, std::to_string(records.size()) + " records, train/val/test " + std::to_string(d.train.size()) + "/" +
                  std::to_string(d.validation.size()) + "/" + std::to_string(d.test.size()) +
                  "; macro-F1 " + fmt(d.uom_report.macro_f1) + " (bar " + fmt(kMacroF1Bar) +
                  "); strict accuracy " + fmt(d.extraction_report.strict_recall) + " (bar " +
                  fmt(kStrictAccuracyBar) + "), strict precision " + fmt(d.extraction_report.strict_precision) +
                  "; extraction set " + std::to_string(q.used) + " used, " + std::to_string(q.dropped) +
                  " dropped; " + fmt(d.seconds, 4) + " s of " + fmt(kDeskSeconds, 4)};
}

Outcome directional() {
  auto& d = desk();
  if (!d.classifier || !d.extractor) return {false, "desk models missing"};
  // (a) ambiguous slice, model vs rules.
  const auto hard = hard_slice(d.test);
  Pipeline p(*d.classifier, *d.extractor);
  const auto model = evaluate_extraction(p, hard);
  const auto rules = evaluate_baseline(hard);
  const bool a = model.strict_precision >= rules.strict_precision;

  // (b), (c): classifier cells on the same split.
  TrainConfig base;
  TrainConfig up = base;
  up.upsample = 2.0;
  TrainConfig nocat = base;
  nocat.use_categories = false;
  const auto rows = run_ablation({{"short_text+categories f=1", base},
                                  {"short_text+categories f=2", up},
                                  {"short_text", nocat}},
                                 d.train, d.validation, d.test);
  std::cout << ablation_csv(rows);
  const double r1 = rows[0].held_out.measure_recall(), r2 = rows[1].held_out.measure_recall();
  const double f_cat = rows[0].hard.micro_f1, f_plain = rows[2].hard.micro_f1;
  const bool b = r2 >= r1;
  const bool c = f_cat >= f_plain;
  return {a && b && c, std::string("(a) ") + (a ? "ok" : "no") + " model P " + fmt(model.strict_precision) +
                           " vs baseline P " + fmt(rules.strict_precision) + " on " + std::to_string(hard.size()) +
                           " ambiguous; (b) " + (b ? "ok" : "no") + " weight+volume recall f=2 " + fmt(r2) +
                           " vs f=1 " + fmt(r1) + "; (c) " + (c ? "ok" : "no") + " hard F1 categories " +
                           fmt(f_cat) + " vs none " + fmt(f_plain)};
}

Outcome latency() {
  auto& d = desk();
  if (!d.classifier || !d.extractor) return {false, "desk models missing"};
  Pipeline p(*d.classifier, *d.extractor);
  BenchConfig cfg;
  const auto rep = bench(p, d.test, cfg);
  std::cout << rep.to_json().dump() << "\n";
  double at2 = -1;
  bool all_positive = rep.rows.size() == 3;
  std::string detail;
  for (const auto& r : rep.rows) {
    if (r.threads == 2) at2 = r.mean_ms;
    all_positive = all_positive && r.mean_ms > 0 && r.p90_ms > 0;
    detail += std::to_string(r.threads) + " threads mean " + fmt(r.mean_ms, 3) + " ms p90 " + fmt(r.p90_ms, 3) +
              " ms; ";
  }
  detail += rep.attributes + ", bar " + fmt(kLatencyBarMs) + " ms at 2 threads";
  return {all_positive && at2 >= 0 && at2 < kLatencyBarMs, detail};
}

// ---- 8 ---------------------------------------------------------------------

Outcome vocabulary() {
  const auto& v = CharVocab::standard();
  bool ok = v.size() == 128;
  for (char32_t c : {U'ç', U'é', U'ñ'}) ok = ok && v.index_of(c) > CharVocab::kUnknownIndex;
  // Random in-vocabulary strings survive encode then decode.
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> pick(2, static_cast<int>(v.size()) - 1), len(0, 60);
  int failures_seen = 0;
  for (int t = 0; t < 2000; ++t) {
    std::u32string s;
    for (int k = len(rng); k > 0; --k) s.push_back(v.char_at(pick(rng)));
    const auto enc = encode_text(utf8_encode(s), v, 1000);
    std::u32string back;
    for (int id : enc.ids) back.push_back(v.char_at(id));
    if (back != s) ++failures_seen;
  }
  ok = ok && failures_seen == 0;
  return {ok, std::to_string(v.size()) + " entries, 2000 round trips, " + std::to_string(failures_seen) + " failed"};
}

// ---- 10 --------------------------------------------------------------------

std::string one_run(const fs::path& dir) {
  fs::create_directories(dir);
  DatasetConfig dc;
  dc.n = 400;
  dc.seed = 21;
  const auto records = records_of(generate_dataset(dc));
  const auto spans = tag_dataset(records);
  std::vector<std::pair<std::string, std::vector<GoldSpan>>> rows(spans.begin(), spans.end());
  const auto split = stratified_split(records, &spans, 0.1, 0.1, 5);
  const auto train = select(records, split.train), val = select(records, split.validation),
             test = select(records, split.test);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 4;
  auto u = train_uom(cfg, train, val);
  save_checkpoint(u.model.to_checkpoint(), dir / "uom.ckpt");
  cfg.phase = Phase::qe;
  cfg.epochs = 1;
  auto q = train_qe(cfg, u.model, train, spans, val);
  save_checkpoint(q.model.to_checkpoint(u.model.params().fingerprint()), dir / "qe.ckpt");
  Pipeline p(u.model, q.model);
  return to_jsonl(records) + "\x1e" + span_sidecar_text(rows) + "\x1e" + slurp(dir / "uom.ckpt") + "\x1e" +
         slurp(dir / "qe.ckpt") + "\x1e" + evaluate_uom(u.model, test).to_json().dump() + "\x1e" +
         evaluate_extraction(p, test).to_json().dump();
}

Outcome determinism() {
  const std::string a = one_run(workdir() / "run_a"), b = one_run(workdir() / "run_b");
  return {a == b, "synth, tag, train (both phases), eval: " + std::to_string(a.size()) + " bytes, " +
                      (a == b ? "identical" : "different")};
}

}  // namespace

int main() {
  std::cout << "acceptance run" << std::endl;
  report(1, "gradient checks", gradients);
  report(2, "worked titles aggregate exactly", table_one);
  report(3, "tagger matches exhaustive oracle", tagger_oracle_check);
  report(4, "span image invariants", span_images);
  report(5, "desk-scale training", desk_training);
  report(6, "directional comparisons", directional);
  report(7, "latency", latency);
  report(8, "vocabulary contract", vocabulary);
  report(9, "classifier frozen during extractor training", [] {
    return desk().classifier ? Outcome{desk().frozen, desk().frozen_detail} : Outcome{false, "desk run missing"};
  });
  report(10, "determinism", determinism);
  fs::remove_all(workdir());
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
