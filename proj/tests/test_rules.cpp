#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "ppu/aggregate.hpp"
#include "ppu/errors.hpp"
#include "ppu/lexicon.hpp"
#include "ppu/rules.hpp"
#include "ppu/text.hpp"
#include "worked_titles.hpp"

using namespace ppu;

namespace {

const UnitLexicon& lex() { return UnitLexicon::standard(); }

ProductRecord titled(const std::string& title) {
  ProductRecord r;
  r.id = "t";
  r.attributes = {{"title", title}};
  return r;
}

std::string slice(const std::string& utf8, std::size_t start, std::size_t end) {
  return utf8_encode(std::u32string_view(utf8_decode(utf8)).substr(start, end - start));
}

}  // namespace

TEST_CASE("find_candidates on the worked titles") {
  auto c = find_candidates_in("title", "42.5 oz Canister (2 Pack)", lex());
  REQUIRE(c.size() == 2);
  CHECK(c[0].value == 42.5);
  CHECK(c[0].cued_type == UoMType::weight);
  CHECK(c[0].cue_unit == "oz");
  CHECK(c[1].value == 2);
  CHECK(c[1].cued_type == UoMType::count);
  CHECK(c[1].cue_unit == "pack");

  CHECK(find_candidates_in("title", "Blushes gift set", lex()).empty());

  auto comp = find_candidates_in("title", "2 x 200 ml", lex());
  REQUIRE(comp.size() == 2);
  CHECK(comp[0].value == 2);
  CHECK(comp[0].cued_type == UoMType::count);
  CHECK_FALSE(comp[0].cue_unit.has_value());
  CHECK(comp[1].value == 200);
  CHECK(comp[1].cued_type == UoMType::volume);

  auto glued = find_candidates_in("title", "2x200ml", lex());
  REQUIRE(glued.size() == 2);
  CHECK(glued[1].cue_unit == "ml");
  CHECK(find_candidates_in("title", "Atta 120gm", lex()).at(0).cue_unit == "gm");
}

TEST_CASE("cue window, bigrams, pack-of and decimal commas") {
  auto fl = find_candidates_in("t", "Juice 12 fl oz bottle", lex());
  REQUIRE(fl.size() == 1);
  CHECK(fl[0].cued_type == UoMType::volume);
  CHECK(fl[0].cue_unit == "fl oz");

  auto pack_of = find_candidates_in("t", "red 60 gm (Pack of 2), (total 120 gm)", lex());
  REQUIRE(pack_of.size() == 3);
  CHECK(pack_of[1].cue_unit == "pack");

  // The window stops at the next numeral.
  auto stop = find_candidates_in("t", "6 (12 oz each)", lex());
  CHECK(stop[0].cued_type == UoMType::count);
  CHECK_FALSE(stop[0].cue_unit.has_value());

  // Second word of the window still counts.
  auto second = find_candidates_in("t", "500 gentle ml", lex());
  CHECK(second[0].cue_unit == "ml");

  auto eu = find_candidates_in("t", "Crème 1,5 l", lex());
  REQUIRE(eu.size() == 1);
  CHECK(eu[0].value == 1.5);
  CHECK(eu[0].end - eu[0].start == 3);
  CHECK(find_candidates_in("t", "1,000 sheets", lex()).at(0).value == 1000);

  CHECK(find_candidates_in("t", "8 Hour Germ", lex()).at(0).cued_type == UoMType::count);
}

TEST_CASE("candidate spans slice to their value") {
  std::mt19937_64 rng(3);
  const std::vector<std::string> pieces{"Soap", "200", "ml", "(", "pack", "of", "3", ")", "1,5", "kg", "x",
                                        "4.25", "oz", "12", "ct", "Crème", "-", "7", "gm", "fl", "oz"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::uniform_int_distribution<int> glue(0, 3);
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    for (int w = 0; w < 10; ++w) {
      if (!text.empty() && glue(rng) != 0) text += ' ';
      text += pieces[pick(rng)];
    }
    for (const auto& c : find_candidates_in("t", text, lex())) {
      CHECK(c.start < c.end);
      const auto v = parse_numeral(utf8_decode(slice(text, c.start, c.end)));
      REQUIRE(v.has_value());
      CHECK(*v == c.value);
    }
  }
}

TEST_CASE("lexicon tokens map to one type and positive factors") {
  std::map<std::string, UoMType> seen;
  for (const auto& e : lex().entries()) {
    CHECK(e.factor > 0);
    CHECK(seen.emplace(e.token, e.type).second);
  }
  CHECK(lex().lookup("gm")->factor == 1.0);
  CHECK(lex().lookup("fl oz")->factor == 29.5735);
  CHECK(lex().lookup("lb")->factor == 453.592);
  CHECK_THROWS_AS(UnitLexicon({{"g", UoMType::weight, 1}, {"g", UoMType::volume, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(UnitLexicon({{"g", UoMType::weight, 0}}), std::invalid_argument);
}

TEST_CASE("lexicon config file") {
  const auto path = std::filesystem::temp_directory_path() / "ppu_lexicon_test.csv";
  {
    std::ofstream out(path);
    out << "# custom\nkg,weight,1000\ntin,count,1\nfl oz,volume,29.5735\n";
  }
  const auto custom = UnitLexicon::from_file(path);
  CHECK(custom.entries().size() == 3);
  CHECK(find_candidates_in("t", "4 tin", custom).at(0).cue_unit == "tin");
  CHECK(find_candidates_in("t", "4 ml", custom).at(0).cued_type == UoMType::count);
  CHECK_THROWS_AS(UnitLexicon::from_csv("kg,heavy,1\n"), DataError);
  CHECK_THROWS_AS(UnitLexicon::from_csv("kg;weight;1\n"), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("span_uom_type shares the candidate cue rule") {
  const std::string t1 = worked_titles::rows()[0].title;
  const auto pos = utf8_decode(t1).find(U"24");
  auto cue = span_uom_type(t1, pos, pos + 2, lex());
  CHECK(cue.type == UoMType::count);
  CHECK(cue.unit == "ct");

  auto oz = span_uom_type("42.5 oz Canister (2 Pack)", 0, 4, lex());
  CHECK(oz.type == UoMType::weight);
  CHECK(oz.unit == "oz");
  auto two = span_uom_type("42.5 oz Canister (2 Pack)", 18, 19, lex());
  CHECK(two.type == UoMType::count);
  CHECK(span_uom_type("no digits here", 0, 2, lex()).type == UoMType::count);
}

TEST_CASE("classify_uom_rules") {
  CHECK(classify_uom_rules(titled("Shower gel 250 ml")) == UoMType::volume);
  CHECK(classify_uom_rules(titled("Shower gel ml")) == UoMType::volume);
  CHECK(classify_uom_rules(titled("Basmati rice kg")) == UoMType::weight);
  CHECK(classify_uom_rules(titled("Blushes gift set")) == UoMType::count);
  CHECK(classify_uom_rules(titled("Hand wash liquid refill")) == UoMType::volume);
  // Without a numeral-attached unit, volume outranks weight.
  CHECK(classify_uom_rules(titled("oz and ml")) == UoMType::volume);
  const UoMType want[] = {UoMType::count, UoMType::weight, UoMType::weight, UoMType::volume, UoMType::weight};
  for (std::size_t i = 0; i < 5; ++i) {
    INFO("row " << i + 1);
    CHECK(classify_uom_rules(worked_titles::record(i)) == want[i]);
  }
}

TEST_CASE("extract_quantities_rules") {
  auto row1 = extract_quantities_rules(worked_titles::record(0));
  REQUIRE(row1.has_value());
  CHECK(row1->total.uom == UoMType::count);
  CHECK(row1->total.value == 24);

  // "200 ml (pack of 2), (100 ml each)": 200 + 100, times the pack of 2.
  auto row4 = extract_quantities_rules(worked_titles::record(3));
  REQUIRE(row4.has_value());
  CHECK(row4->total.value == 600);
  CHECK(row4->total.unit == "ml");

  CHECK_FALSE(extract_quantities_rules(titled("Dumbbell 500 kg")).has_value());
  CHECK_FALSE(extract_quantities_rules(titled("Blushes gift set")).has_value());

  RulesConfig wide;
  wide.guardrails.weight_max_g = 1e6;
  auto heavy = extract_quantities_rules(titled("Dumbbell 500 kg"), lex(), wide);
  REQUIRE(heavy.has_value());
  CHECK(heavy->total.value == 500);
  CHECK(heavy->total.unit == "kg");
}

TEST_CASE("rule extraction never breaks its guardrails") {
  std::mt19937_64 rng(9);
  const std::vector<std::string> units{"g", "kg", "mg", "ml", "l", "ct", "pack", "oz", "fl oz"};
  std::uniform_int_distribution<std::size_t> unit(0, units.size() - 1);
  std::uniform_real_distribution<double> value(0.01, 3000);
  std::uniform_int_distribution<int> count(1, 3);
  const Guardrails g;
  for (int trial = 0; trial < 500; ++trial) {
    std::string title = "Item";
    for (int k = count(rng); k > 0; --k) title += " " + std::to_string(std::round(value(rng) * 10) / 10) + " " + units[unit(rng)];
    const auto r = extract_quantities_rules(titled(title));
    if (!r) continue;
    for (const auto& c : r->used) {
      const auto base = to_base_units(c.value, c.cue_unit.value_or("count"), c.cued_type, lex());
      REQUIRE(base.has_value());
      CHECK(g.allows(c.cued_type, *base));
    }
    CHECK(g.allows(r->total.uom, *to_base_units(r->total.value, r->total.unit, r->total.uom, lex())));
  }
}
