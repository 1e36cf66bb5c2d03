#include "doctest.h"

#include <map>
#include <set>

#include "ppu/aggregate.hpp"
#include "ppu/analyze.hpp"
#include "ppu/lexicon.hpp"
#include "ppu/synthgen.hpp"
#include "ppu/tagger.hpp"
#include "ppu/text.hpp"
#include "ppu/vocab.hpp"

using namespace ppu;

namespace {

const TemplateSpec& find_template(const std::string& name, Locale l) {
  for (const auto& t : template_library())
    if (t.name == name && t.locale == l) return t;
  throw std::runtime_error("no template " + name);
}

std::string span_text(const ProductRecord& r, const GoldSpan& s) {
  const auto u = utf8_decode(*r.attribute(s.attribute));
  return utf8_encode(std::u32string_view(u).substr(s.start, s.end - s.start));
}

std::vector<ProductRecord> records_of(const std::vector<SyntheticExample>& d) {
  std::vector<ProductRecord> out;
  for (const auto& e : d) out.push_back(e.record);
  return out;
}

}  // namespace

TEST_CASE("library coverage") {
  std::set<std::string> names, tops;
  bool blush_node = false;
  for (const auto& t : template_library()) {
    names.insert(t.name);
    tops.insert(t.categories.front());
    blush_node = blush_node || t.categories.back() == "blushes";
    CHECK_NOTHROW(t.validate());
  }
  CHECK(names.size() >= 30);
  CHECK(tops == std::set<std::string>{"beauty", "grocery", "health"});
  CHECK(blush_node);
  for (int spans = 0; spans <= 3; ++spans) {
    bool any = false;
    for (const auto& t : template_library()) any = any || t.span_count == spans;
    CHECK(any);
  }
}

TEST_CASE("every template draws consistent records") {
  const auto& lex = UnitLexicon::standard();
  std::mt19937_64 rng(3);
  for (const auto& t : template_library()) {
    INFO(t.name << " " << to_string(t.locale));
    for (int k = 0; k < 20; ++k) {
      const auto ex = generate_example(t, rng);
      const auto& r = ex.record;
      REQUIRE(r.gold_total);
      CHECK(static_cast<int>(ex.spans.size()) == t.span_count);
      CHECK(record_ambiguity(r) == (t.ambiguous ? 1 : 0));
      CHECK(r.categories == t.categories);
      // Gold spans aggregate to the gold total exactly.
      std::vector<TypedQuantity> typed;
      for (const auto& s : ex.spans) {
        const auto cue = span_uom_type(*r.attribute("title"), s.start, s.end, lex);
        const auto v = parse_numeral(fold_case(utf8_decode(span_text(r, s))));
        REQUIRE(v);
        typed.push_back({*v, cue.type, cue.unit.value_or("count")});
      }
      const auto total = aggregate_total(typed, *r.gold_uom, lex);
      REQUIRE(total);
      CHECK(nearly_equal(total->value, r.gold_total->value));
      CHECK(total->unit == r.gold_total->unit);
      const auto q = qualify_spans(find_candidates(r, lex, {"title"}), *r.gold_total, *r.gold_uom, lex);
      CHECK(q.qualified == !t.additive);
    }
  }
}

TEST_CASE("worked patterns") {
  SUBCASE("canister pack of two") {
    auto t = find_template("canister pack", Locale::us);
    t.slots[0].units = {{"oz", {42.5}}};
    t.slots[1].values = {2};
    std::mt19937_64 rng(1);
    const auto ex = generate_example(t, rng);
    CHECK(ex.record.gold_uom == UoMType::weight);
    CHECK(ex.record.gold_total->value == 85);
    CHECK(ex.record.gold_total->unit == "oz");
    REQUIRE(ex.spans.size() == 2);
    CHECK(span_text(ex.record, ex.spans[0]) == "42.5");
    CHECK(span_text(ex.record, ex.spans[1]) == "2");
  }
  SUBCASE("count with no stated quantity") {
    std::mt19937_64 rng(2);
    const auto ex = generate_example(find_template("lipstick", Locale::in), rng);
    CHECK(ex.record.gold_uom == UoMType::count);
    CHECK(ex.record.gold_total->value == 1);
    CHECK(ex.record.gold_total->unit == "count");
    CHECK(ex.spans.empty());
  }
  SUBCASE("concentration distractor is not a span") {
    auto t = find_template("creatine extra", Locale::us);
    t.slots[1].values = {5000};
    std::mt19937_64 rng(3);
    const auto ex = generate_example(t, rng);
    const auto& title = *ex.record.attribute("title");
    CHECK(title.find("5000 mg") != std::string::npos);
    for (const auto& s : ex.spans) CHECK(span_text(ex.record, s) != "5000");
    CHECK(ex.record.gold_total->unit == "g");
  }
  SUBCASE("stated total next to the pack") {
    auto t = find_template("churna total", Locale::in);
    t.slots[0].units = {{"gm", {60}}};
    t.slots[1].values = {2};
    std::mt19937_64 rng(4);
    const auto ex = generate_example(t, rng);
    CHECK(ex.record.gold_total->value == 120);
    CHECK(ex.record.gold_total->unit == "gm");
    CHECK(ex.record.attribute("title")->find("120") != std::string::npos);
  }
}

TEST_CASE("locale flavour") {
  std::mt19937_64 rng(9);
  bool accented = false, comma_decimal = false, oov = false;
  for (int k = 0; k < 300; ++k) {
    for (const auto* name : {"staple", "cooking oil", "face powder", "spice"}) {
      const auto eu = generate_example(find_template(name, Locale::eu5), rng).record;
      const auto& t = *eu.attribute("title");
      for (char32_t c : utf8_decode(t)) accented = accented || (c > 0x7f && CharVocab::standard().index_of(c) > 1);
      comma_decimal = comma_decimal || t.find(",5 ") != std::string::npos;
      const auto in = generate_example(find_template(name, Locale::in), rng).record;
      const auto lower = utf8_encode(fold_case(utf8_decode(*in.attribute("title"))));
      for (const char* w : {"atta", "ghee", "masala", "haldi", "jeera", "dal"})
        oov = oov || lower.find(w) != std::string::npos;
    }
  }
  CHECK(accented);
  CHECK(comma_decimal);
  CHECK(oov);
}

TEST_CASE("dataset contract") {
  DatasetConfig cfg;
  cfg.n = 0;
  CHECK(generate_dataset(cfg).empty());
  cfg.span_mix = {0.5, 0.5, 0.5, 0};
  cfg.n = 10;
  CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
  cfg.span_mix = {1.2, -0.2, 0, 0};
  CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
  cfg.span_mix = {0.54, 0.345, 0.113, 0.002};
  cfg.ambiguity_share = 1.5;
  CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
}

TEST_CASE("5000 records follow the span mix and ambiguity share") {
  DatasetConfig cfg;
  cfg.n = 5000;
  cfg.seed = 17;
  const auto d = generate_dataset(cfg);
  REQUIRE(d.size() == 5000);
  SpanMap spans;
  std::set<std::string> ids;
  for (const auto& e : d) {
    spans[e.record.id] = e.spans;
    ids.insert(e.record.id);
  }
  CHECK(ids.size() == 5000);
  const auto stats = dataset_stats(records_of(d), &spans);
  const std::array<double, 4> target{0.540, 0.345, 0.113, 0.002};
  for (int k = 0; k < 4; ++k) {
    const double got = stats.span_histogram.count(k) ? double(stats.span_histogram.at(k)) / 5000.0 : 0.0;
    INFO("spans " << k);
    CHECK(std::abs(got - target[k]) <= 0.02);
  }
  CHECK(std::abs(stats.ambiguity_share() - 0.21) <= 0.01);
  const auto hard_count = stats.ambiguous_per_uom.at("count");
  CHECK(double(hard_count) / double(stats.ambiguous) == doctest::Approx(0.6).epsilon(0.02));
  // A few additive records the tagger cannot label.
  CHECK(stats.unqualifiable == 0);  // spans were supplied, so nothing is re-tagged
  const auto retagged = dataset_stats(records_of(d));
  CHECK(retagged.unqualifiable > 0);
  CHECK(retagged.unqualifiable < 200);
}

TEST_CASE("generation is deterministic per seed and locale") {
  DatasetConfig cfg;
  cfg.n = 400;
  cfg.seed = 5;
  const auto a = generate_dataset(cfg), b = generate_dataset(cfg);
  CHECK(to_jsonl(records_of(a)) == to_jsonl(records_of(b)));
  cfg.seed = 6;
  CHECK(to_jsonl(records_of(generate_dataset(cfg))) != to_jsonl(records_of(a)));
  cfg.locale = Locale::eu5;
  for (const auto& e : generate_dataset(cfg)) {
    bool eu = false;
    for (const auto& t : template_library())
      eu = eu || (t.name == e.template_name && t.locale == Locale::eu5);
    CHECK(eu);
  }
}

TEST_CASE("apportion") {
  CHECK(apportion(10, {0.54, 0.345, 0.113, 0.002}) == std::vector<std::size_t>{5, 4, 1, 0});
  CHECK(apportion(5000, {0.54, 0.345, 0.113, 0.002}) == std::vector<std::size_t>{2700, 1725, 565, 10});
  CHECK(apportion(0, {0.5, 0.5}) == std::vector<std::size_t>{0, 0});
  CHECK(apportion(3, {1.0 / 3, 1.0 / 3, 1.0 / 3}) == std::vector<std::size_t>{1, 1, 1});
}

TEST_CASE("locale names") {
  CHECK(parse_locale("eu5") == Locale::eu5);
  CHECK(to_string(Locale::in) == "in");
  CHECK_THROWS_AS(parse_locale("uk"), std::invalid_argument);
}
