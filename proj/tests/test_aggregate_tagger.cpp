#include "doctest.h"

#include <cmath>
#include <algorithm>
#include <random>
#include <set>

#include "ppu/aggregate.hpp"
#include "ppu/tagger.hpp"
#include "tagger_oracle.hpp"

using namespace ppu;

namespace {

const UnitLexicon& lex() { return UnitLexicon::standard(); }

TypedQuantity w(double v, const std::string& unit) { return {v, UoMType::weight, unit}; }
TypedQuantity vol(double v, const std::string& unit) { return {v, UoMType::volume, unit}; }
TypedQuantity cnt(double v) { return {v, UoMType::count, "count"}; }

CandidateQuantity cand(double v, UoMType t, std::optional<std::string> unit, std::size_t pos) {
  return {v, "title", pos, pos + 1, t, std::move(unit)};
}

}  // namespace

TEST_CASE("aggregate_total worked cases") {
  auto a = aggregate_total({w(42.5, "oz"), cnt(2)}, UoMType::weight, lex());
  REQUIRE(a);
  CHECK(a->value == 85);
  CHECK(a->unit == "oz");

  auto b = aggregate_total({w(200, "g"), w(100, "g")}, UoMType::weight, lex());
  REQUIRE(b);
  CHECK(b->value == 300);
  CHECK(b->unit == "g");

  // Literal duplicate-to-sum rule on all three quantities of the third title.
  auto c = aggregate_total({w(60, "gm"), cnt(2), w(120, "gm")}, UoMType::weight, lex());
  REQUIRE(c);
  CHECK(c->value == 360);
  auto tagged = aggregate_total({w(60, "gm"), cnt(2)}, UoMType::weight, lex());
  CHECK(tagged->value == 120);

  auto none = aggregate_total({}, UoMType::count, lex());
  REQUIRE(none);
  CHECK(none->value == 1);
  CHECK(none->unit == "count");

  CHECK_FALSE(aggregate_total({cnt(3)}, UoMType::weight, lex()).has_value());
}

TEST_CASE("aggregate duplicate handling and units") {
  // Repeated 100 is collapsed before summing.
  auto dup = aggregate_total({vol(100, "ml"), vol(100, "ml"), vol(200, "ml")}, UoMType::volume, lex());
  CHECK(dup->value == 300);
  // 150 restates the running sum 100 + 50 and is dropped.
  auto restated = aggregate_total({w(100, "g"), w(50, "g"), w(150, "g")}, UoMType::weight, lex());
  CHECK(restated->value == 150);

  auto mixed = aggregate_total({w(1, "kg"), w(500, "g")}, UoMType::weight, lex());
  CHECK(mixed->unit == "g");
  CHECK(mixed->value == doctest::Approx(1500));

  std::vector<std::string> warnings;
  auto ignored = aggregate_total({w(1, "kg"), vol(500, "ml")}, UoMType::weight, lex(), &warnings);
  CHECK(ignored->value == 1);
  CHECK(ignored->unit == "kg");
  CHECK(warnings.size() == 1);

  auto counts = aggregate_total({cnt(3), w(5, "g"), cnt(4), cnt(3)}, UoMType::count, lex());
  CHECK(counts->value == 12);
}

TEST_CASE("aggregate properties on random inputs") {
  std::mt19937_64 rng(21);
  const std::vector<std::string> wunits{"g", "kg", "oz", "mg"};
  std::uniform_int_distribution<int> n(0, 5), kind(0, 2), small(1, 12);
  std::uniform_int_distribution<std::size_t> u(0, wunits.size() - 1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<TypedQuantity> spans;
    const int m = n(rng);
    for (int i = 0; i < m; ++i) {
      if (kind(rng) == 0) {
        spans.push_back(cnt(small(rng)));
      } else {
        spans.push_back(w(small(rng) * 25, wunits[u(rng)]));
      }
    }
    for (auto uom : {UoMType::count, UoMType::weight}) {
      auto r = aggregate_total(spans, uom, lex());
      if (!r) {
        bool any_weight = false;
        for (const auto& s : spans) any_weight = any_weight || s.type == UoMType::weight;
        CHECK(uom == UoMType::weight);
        CHECK_FALSE(any_weight);
        continue;
      }
      CHECK(r->value > 0);
      CHECK(std::isfinite(r->value));
      if (uom == UoMType::count) {
        std::vector<double> seen;
        double product = 1;
        for (const auto& s : spans) {
          if (s.type != UoMType::count) continue;
          if (std::find(seen.begin(), seen.end(), s.value) != seen.end()) continue;
          seen.push_back(s.value);
          product *= s.value;
        }
        CHECK(r->value == product);
      } else {
        std::set<std::string> units;
        for (const auto& s : spans)
          if (s.type == UoMType::weight) units.insert(s.unit);
        CHECK(r->unit == (units.size() == 1 ? *units.begin() : std::string("g")));
      }
      // Idempotence: the aggregate as a single span returns itself.
      TypedQuantity again{r->value, r->uom, r->unit};
      auto twice = aggregate_total({again}, uom, lex());
      REQUIRE(twice);
      CHECK(twice->value == r->value);
      CHECK(twice->unit == r->unit);
    }
  }
}

TEST_CASE("qualify_spans worked cases") {
  std::vector<CandidateQuantity> row2{cand(42.5, UoMType::weight, "oz", 0), cand(2, UoMType::count, "pack", 5)};
  auto q2 = qualify_spans(row2, {85, "oz"}, UoMType::weight, lex());
  REQUIRE(q2.qualified);
  REQUIRE(q2.spans.size() == 2);
  CHECK(q2.spans[0].value == 42.5);
  CHECK(q2.spans[1].value == 2);

  auto q1 = qualify_spans(row2, {1, "count"}, UoMType::count, lex());
  CHECK(q1.qualified);
  CHECK(q1.spans.empty());

  std::vector<CandidateQuantity> row1{cand(24, UoMType::count, "ct", 0), cand(8.3, UoMType::weight, "oz", 5)};
  auto r1 = qualify_spans(row1, {24, "count"}, UoMType::count, lex());
  REQUIRE(r1.spans.size() == 1);
  CHECK(r1.spans[0].value == 24);

  std::vector<CandidateQuantity> row3{cand(60, UoMType::weight, "gm", 0), cand(2, UoMType::count, "pack", 5),
                                      cand(120, UoMType::weight, "gm", 9)};
  auto r3 = qualify_spans(row3, {120, "gm"}, UoMType::weight, lex());
  REQUIRE(r3.spans.size() == 2);
  CHECK(r3.spans[0].value == 60);
  CHECK(r3.spans[1].value == 2);

  // Unit conversion into the total's unit.
  std::vector<CandidateQuantity> kg{cand(0.5, UoMType::weight, "kg", 0), cand(2, UoMType::count, std::nullopt, 4)};
  auto rk = qualify_spans(kg, {1000, "g"}, UoMType::weight, lex());
  CHECK(rk.spans.size() == 2);

  // A volume candidate cannot serve a weight total.
  std::vector<CandidateQuantity> wrong{cand(200, UoMType::volume, "ml", 0)};
  CHECK_FALSE(qualify_spans(wrong, {200, "g"}, UoMType::weight, lex()).qualified);
}

TEST_CASE("qualify_spans agrees with the exhaustive oracle") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto inst = tagger_oracle::random_instance(rng);
    const auto got = qualify_spans(inst.candidates, inst.total, inst.uom, lex());
    const auto all = tagger_oracle::all_qualifying(inst.candidates, inst.total, inst.uom);
    const bool trivial = inst.uom == UoMType::count && inst.total.value == 1;
    if (trivial) {
      CHECK(got.qualified);
      CHECK(got.spans.empty());
      continue;
    }
    CHECK(got.qualified == !all.empty());
    if (all.empty()) continue;
    // First qualifying combination of the largest size in lexicographic order.
    CHECK(tagger_oracle::indices_of(got.spans, inst.candidates) == all.front());
    CHECK(tagger_oracle::satisfies(got.spans, inst.total, inst.uom));
  }
}
