#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "ppu/analyze.hpp"
#include "ppu/errors.hpp"
#include "ppu/noise.hpp"
#include "ppu/record.hpp"
#include "ppu/text.hpp"
#include "ppu/vocab.hpp"

using namespace ppu;

namespace {

std::string slice(const std::string& utf8, std::size_t start, std::size_t end) {
  return utf8_encode(std::u32string_view(utf8_decode(utf8)).substr(start, end - start));
}

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

ProductRecord random_record(std::mt19937_64& rng, int i) {
  static const std::vector<std::string> words{"Crème", "Soap", "ñandú", "Ölbad", "200", "ml", "kg", "(Pack", "of",
                                              "2)", "Ça", "va", "ß", "œuf", "\"quoted\"", "back\\slash", "24"};
  std::uniform_int_distribution<std::size_t> w(0, words.size() - 1);
  std::uniform_int_distribution<int> len(0, 12), coin(0, 2);
  ProductRecord r;
  r.id = "rec-" + std::to_string(i);
  std::string title;
  for (int k = len(rng); k > 0; --k) title += (title.empty() ? "" : " ") + words[w(rng)];
  r.attributes.emplace_back("title", title);
  if (coin(rng)) r.attributes.emplace_back("description", words[w(rng)] + "\n" + words[w(rng)]);
  if (coin(rng) == 0) r.categories = {"A", "A/blushes", "A/blushes/" + std::to_string(i % 3)};
  if (coin(rng)) r.gold_uom = kAllUoMTypes[static_cast<std::size_t>(i % 3)];
  if (coin(rng)) r.gold_total = GoldTotal{0.25 * (i + 1), i % 2 ? "ml" : "count"};
  return r;
}

}  // namespace

TEST_CASE("vocabulary has 128 entries and round-trips") {
  const auto& v = CharVocab::standard();
  CHECK(v.size() == 128);
  for (char32_t c : {U'ç', U'é', U'ñ'}) CHECK(v.index_of(c) > CharVocab::kUnknownIndex);
  for (int i = 2; i < 128; ++i) CHECK(v.index_of(v.char_at(i)) == i);
  CHECK(v.index_of(U'Ç') == v.index_of(U'ç'));
  CHECK(v.index_of(U'\n') == v.index_of(U' '));
  CHECK(v.index_of(U'☃') == CharVocab::kUnknownIndex);
}

TEST_CASE("encode_text") {
  const auto& v = CharVocab::standard();
  auto empty = encode_text(std::string_view(""), v, 10);
  CHECK(empty.ids.empty());
  CHECK(empty.length == 0);
  auto a = encode_text(std::string_view("a"), v, 10);
  REQUIRE(a.length == 1);
  CHECK(v.char_at(a.ids[0]) == U'a');
  CHECK(encode_text(std::string_view("Ç"), v, 4).ids == encode_text(std::string_view("ç"), v, 4).ids);
  auto cut = encode_text(std::string_view("abcdef"), v, 4);
  CHECK(cut.length == 4);
  CHECK(pad_ids(cut, 6) == std::vector<int>{cut.ids[0], cut.ids[1], cut.ids[2], cut.ids[3], 0, 0});
  CHECK_THROWS_AS(encode_text(std::string_view("a"), v, 0), std::invalid_argument);
  // Offsets are code points, so accented text keeps positions aligned.
  CHECK(encode_text(std::string_view("crème 1,5 l"), v, 64).length == 11);
}

TEST_CASE("jsonl round trip") {
  std::mt19937_64 rng(5);
  std::vector<ProductRecord> recs;
  for (int i = 0; i < 100; ++i) recs.push_back(random_record(rng, i));
  const auto path = temp_file("ppu_roundtrip.jsonl");
  write_jsonl(recs, path);
  CHECK(load_jsonl(path) == recs);

  write_jsonl({}, path);
  CHECK(std::filesystem::file_size(path) == 0);
  CHECK(load_jsonl(path).empty());
  std::filesystem::remove(path);
}

TEST_CASE("jsonl errors name the line") {
  const std::string good = R"({"id":"a","attributes":{"title":"x"}})";
  auto check_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_jsonl(text);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  check_error(good + "\n" + R"({"id":"b","attributes":{},"gold_total":{"value":-3,"unit":"g"}})", "line 2");
  check_error(good + "\n\n{not json", "line 3");
  check_error(R"({"id":"a","attributes":{"title":"x"},"gold_uom":"mass"})", "line 1");
  // Unknown fields are ignored.
  auto ok = parse_jsonl(R"({"id":"a","attributes":{"title":"x"},"price":3.5})");
  CHECK(ok.size() == 1);
  CHECK_THROWS_AS(load_jsonl(temp_file("does-not-exist.jsonl")), DataError);
}

TEST_CASE("span sidecar round trip") {
  std::vector<std::pair<std::string, std::vector<GoldSpan>>> rows{{"a", {{"title", 3, 5}, {"title", 9, 12}}},
                                                                  {"b", {}}};
  const auto path = temp_file("ppu_spans.jsonl");
  write_span_sidecar(rows, path);
  const auto back = load_span_sidecar(path);
  CHECK(back.at("a") == rows[0].second);
  CHECK(back.at("b").empty());
  std::filesystem::remove(path);
}

TEST_CASE("noise_text keeps labels intact") {
  ProductRecord r;
  r.id = "n";
  r.attributes = {{"title", "Some gel 200 ml (pack of 2) for hands"}};
  std::vector<GoldSpan> spans{{"title", 9, 12}};
  std::mt19937_64 rng(1);

  auto same = noise_text(r, spans, NoiseConfig{}, rng);
  CHECK(same.record == r);
  CHECK(same.spans == spans);

  // One inserted word ahead of the span shifts it by the word plus a space.
  ProductRecord r2;
  r2.attributes = {{"title", "aaaa bbbb 12 ml"}};
  std::vector<GoldSpan> s2{{"title", 10, 12}};
  auto shifted = apply_edits(r2, s2, {{"title", TextEdit::Kind::insert, 0, "qwert"}});
  CHECK(shifted.spans[0].start == 16);
  CHECK(shifted.spans[0].end == 18);
  CHECK(slice(*shifted.record.attribute("title"), 16, 18) == "12");

  // Deleting a word after the last span leaves spans alone.
  auto tail = apply_edits(r, spans, {{"title", TextEdit::Kind::remove, 7, {}}});
  CHECK(tail.spans == spans);
  CHECK(*tail.record.attribute("title") == "Some gel 200 ml (pack of 2) hands");

  // Removing a span word is refused.
  std::size_t skipped = 0;
  auto refused = apply_edits(r, spans, {{"title", TextEdit::Kind::remove, 2, {}}}, &skipped);
  CHECK(skipped == 1);
  CHECK(refused.record == r);

  NoiseConfig heavy;
  heavy.insert_prob = 0.5;
  heavy.delete_prob = 0.5;
  for (int trial = 0; trial < 500; ++trial) {
    auto rec = random_record(rng, trial);
    std::vector<GoldSpan> gs;
    const auto& title = rec.attributes[0].second;
    const auto u = utf8_decode(title);
    for (std::size_t i = 0; i + 1 < u.size(); ++i)
      if (is_digit(u[i]) && (i == 0 || u[i - 1] == U' ')) {
        std::size_t j = i;
        while (j < u.size() && u[j] != U' ') ++j;
        gs.push_back({"title", i, j});
        i = j;
      }
    auto out = noise_text(rec, gs, heavy, rng);
    REQUIRE(out.spans.size() == gs.size());
    for (std::size_t k = 0; k < gs.size(); ++k) {
      CHECK(slice(*out.record.attribute("title"), out.spans[k].start, out.spans[k].end) ==
            slice(title, gs[k].start, gs[k].end));
    }
  }
  CHECK_THROWS_AS(noise_text(r, {{"title", 30, 99}}, heavy, rng), std::invalid_argument);
}

TEST_CASE("ambiguity four-case definition") {
  const auto& tok = AmbiguityTokens::standard();
  CHECK(ambiguity({"ml"}, UoMType::weight, tok) == 1);
  CHECK(ambiguity({"kg"}, UoMType::weight, tok) == 0);
  CHECK(ambiguity({"gram"}, UoMType::count, tok) == 1);
  CHECK(ambiguity({"kg"}, UoMType::volume, tok) == 1);
  for (auto k : kAllUoMTypes) CHECK(ambiguity({"soap", "bar"}, k, tok) == 0);

  // "fl oz" is one volume token, not a weight "oz".
  const auto words = title_words("Juice 12 FL OZ bottle", tok);
  CHECK(words.count("fl oz") == 1);
  CHECK(words.count("oz") == 0);
  CHECK(ambiguity(words, UoMType::volume, tok) == 0);
  CHECK(tok.volume.count("fluid") == 1);
  for (const auto& w : tok.weight) CHECK(tok.volume.count(w) == 0);
}

TEST_CASE("ambiguity is total over the four cases") {
  const auto& tok = AmbiguityTokens::standard();
  const std::vector<std::set<std::string>> sets{{}, {"g"}, {"ml"}, {"g", "ml"}, {"pack"}};
  for (const auto& s : sets)
    for (auto k : kAllUoMTypes) {
      const bool w = s.count("g"), v = s.count("ml");
      const int cases = (w && k == UoMType::volume) + (v && k == UoMType::weight) + ((w || v) && k == UoMType::count);
      CHECK(ambiguity(s, k, tok) == (cases > 0 ? 1 : 0));
    }
}

TEST_CASE("dataset_stats") {
  const auto empty = dataset_stats({});
  CHECK(empty.records == 0);
  CHECK(empty.ambiguity_share() == 0);
  CHECK(empty.span_histogram.empty());

  std::vector<ProductRecord> recs(3);
  recs[0].id = "0";
  recs[0].attributes = {{"title", "Blush 8 g"}};
  recs[0].gold_uom = UoMType::count;
  recs[0].gold_total = GoldTotal{1, "count"};
  recs[0].categories = {"A"};
  recs[1].id = "1";
  recs[1].attributes = {{"title", "Rice 2 kg"}};
  recs[1].gold_uom = UoMType::weight;
  recs[1].gold_total = GoldTotal{2, "kg"};
  recs[1].categories = {"C"};
  recs[2].id = "2";
  recs[2].attributes = {{"title", "no label"}};
  const auto st = dataset_stats(recs);
  CHECK(st.records == 3);
  CHECK(st.labeled == 2);
  CHECK(st.ambiguous == 1);
  CHECK(st.per_category.at("A").first == 1);
  CHECK(st.span_histogram.at(0) == 1);
  CHECK(st.span_histogram.at(1) == 1);
  CHECK(st.to_json()["per_uom"]["count"]["ambiguous"] == 1);
}

TEST_CASE("upsample sampler frequencies") {
  auto share = [](UpsampleSampler& s, const std::vector<bool>& hard, std::size_t draws) {
    std::size_t total = 0, h = 0;
    while (total < draws)
      for (auto i : s.next_epoch()) {
        ++total;
        h += hard[i];
      }
    return double(h) / double(total);
  };
  std::vector<bool> hard(1000, false);
  for (std::size_t i = 0; i < 210; ++i) hard[i * 4 + 1] = true;
  UpsampleSampler f1(hard, 1.0, 3);
  CHECK(std::abs(share(f1, hard, 10000) - 0.21) <= 0.02);
  UpsampleSampler f2(hard, 2.0, 3);
  CHECK(std::abs(share(f2, hard, 10000) - 0.42) <= 0.02);
  UpsampleSampler f4(hard, 4.0, 3);
  CHECK(f4.target_share() == 0.5);

  // Every non-hard example appears exactly once per epoch.
  auto epoch = f2.next_epoch();
  std::vector<int> seen(1000, 0);
  for (auto i : epoch) ++seen[i];
  for (std::size_t i = 0; i < 1000; ++i)
    if (!hard[i]) CHECK(seen[i] == 1);

  std::vector<bool> none(50, false);
  UpsampleSampler uniform(none, 3.0, 1);
  auto e = uniform.next_epoch();
  std::sort(e.begin(), e.end());
  for (std::size_t i = 0; i < 50; ++i) CHECK(e[i] == i);

  CHECK_THROWS_AS(UpsampleSampler(hard, 0.5, 1), std::invalid_argument);
}
