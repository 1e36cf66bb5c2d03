#include "ppu/lexicon.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ppu/errors.hpp"
#include "ppu/text.hpp"

namespace ppu {

namespace {

std::vector<UnitEntry> standard_entries() {
  std::vector<UnitEntry> e;
  auto add = [&](std::initializer_list<const char*> tokens, UoMType t, double f) {
    for (const char* tok : tokens) e.push_back({tok, t, f});
  };
  const auto w = UoMType::weight, v = UoMType::volume, c = UoMType::count;
  add({"mg", "milligram", "milligrams"}, w, 0.001);
  add({"g", "gm", "gms", "grm", "gram", "grams"}, w, 1.0);
  add({"kg", "kgs", "kilogram", "kilograms"}, w, 1000.0);
  add({"oz", "ounce", "ounces"}, w, 28.3495);
  add({"lb", "lbs", "pound", "pounds"}, w, 453.592);
  add({"ml", "millilitre", "millilitres", "milliliter", "milliliters"}, v, 1.0);
  add({"cl"}, v, 10.0);
  add({"l", "ltr", "litre", "litres", "liter", "liters"}, v, 1000.0);
  add({"fl oz", "fluid ounce", "fluid ounces"}, v, 29.5735);
  add({"gallon", "gallons"}, v, 3785.41);
  add({"ct", "count", "pack", "packs", "pk", "pcs", "pc", "piece", "pieces", "pod", "pods", "tablet", "tablets",
       "capsule", "capsules", "pair", "pairs", "roll", "rolls", "sheet", "sheets", "bag", "bags", "stick", "sticks"},
      c, 1.0);
  return e;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(std::string_view s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("bad number");
  return v;
}

}  // namespace

UnitLexicon::UnitLexicon(std::vector<UnitEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& entry = entries_[i];
    entry.token = utf8_encode(fold_case(std::u32string_view(utf8_decode(entry.token))));
    if (entry.token.empty()) throw std::invalid_argument("unit lexicon: empty token");
    if (!(entry.factor > 0)) throw std::invalid_argument("unit lexicon: factor for '" + entry.token + "' must be > 0");
    if (!index_.emplace(entry.token, i).second) {
      throw std::invalid_argument("unit lexicon: token '" + entry.token + "' listed twice");
    }
    std::size_t words = 1;
    for (char ch : entry.token) words += ch == ' ';
    max_words_ = std::max(max_words_, words);
  }
  if (max_words_ > 2) throw std::invalid_argument("unit lexicon: tokens may have at most two words");
}

const UnitLexicon& UnitLexicon::standard() {
  static const UnitLexicon lexicon(standard_entries());
  return lexicon;
}

UnitLexicon UnitLexicon::from_csv(std::string_view text) {
  std::vector<UnitEntry> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto c1 = line.find(','), c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw DataError("lexicon line " + std::to_string(line_no) + ": expected token,type,factor");
    }
    try {
      rows.push_back({trim(std::string_view(line).substr(0, c1)),
                      parse_uom(trim(std::string_view(line).substr(c1 + 1, c2 - c1 - 1))),
                      to_double(trim(std::string_view(line).substr(c2 + 1)))});
    } catch (const std::invalid_argument& e) {
      throw DataError("lexicon line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  try {
    return UnitLexicon(std::move(rows));
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

UnitLexicon UnitLexicon::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return from_csv(s.str());
}

const UnitEntry* UnitLexicon::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::string_view base_unit(UoMType t) {
  switch (t) {
    case UoMType::weight:
      return "g";
    case UoMType::volume:
      return "ml";
    case UoMType::count:
      return "count";
  }
  return "count";
}

std::vector<Token> tokenize(std::u32string_view text) {
  std::vector<Token> out;
  const std::size_t n = text.size();
  auto digits_from = [&](std::size_t i) {
    std::size_t j = i;
    while (j < n && is_digit(text[j])) ++j;
    return j - i;
  };
  std::size_t i = 0;
  while (i < n) {
    const char32_t c = text[i];
    if (c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == 0xA0) {
      ++i;
      continue;
    }
    Token t;
    t.start = i;
    if (is_digit(c)) {
      std::size_t j = i + digits_from(i);
      std::string num = utf8_encode(text.substr(i, j - i));
      if (j + 1 < n && (text[j] == U'.' || text[j] == U',') && is_digit(text[j + 1])) {
        const std::size_t frac = digits_from(j + 1);
        if (text[j] == U',' && frac == 3) {
          num += utf8_encode(text.substr(j + 1, frac));
        } else {
          num += '.';
          num += utf8_encode(text.substr(j + 1, frac));
        }
        j += 1 + frac;
      }
      t.kind = TokenKind::number;
      t.end = j;
      t.text = utf8_encode(text.substr(i, j - i));
      std::from_chars(num.data(), num.data() + num.size(), t.value);
    } else if (is_letter(c)) {
      std::size_t j = i;
      while (j < n && is_letter(text[j])) ++j;
      t.kind = TokenKind::word;
      t.end = j;
      t.text = utf8_encode(fold_case(text.substr(i, j - i)));
    } else {
      t.kind = TokenKind::punct;
      t.end = i + 1;
      t.text = utf8_encode(text.substr(i, 1));
    }
    out.push_back(std::move(t));
    i = out.back().end;
  }
  return out;
}

std::vector<Token> tokenize(std::string_view utf8) { return tokenize(std::u32string_view(utf8_decode(utf8))); }

UnitCue cue_for_numeral(const std::vector<Token>& tokens, std::size_t index, const UnitLexicon& lexicon) {
  std::vector<const Token*> words;
  for (std::size_t u = index + 1; u < tokens.size() && words.size() < 2; ++u) {
    if (tokens[u].kind == TokenKind::number) break;
    if (tokens[u].kind == TokenKind::word) words.push_back(&tokens[u]);
  }
  for (std::size_t p = 0; p < words.size(); ++p) {
    if (p + 1 < words.size()) {
      if (const auto* e = lexicon.lookup(words[p]->text + " " + words[p + 1]->text)) return {e->type, e->token};
    }
    if (const auto* e = lexicon.lookup(words[p]->text)) return {e->type, e->token};
  }
  // "pack of 2": the numeral directly follows "<count unit> of".
  if (index >= 2 && tokens[index - 1].kind == TokenKind::word && tokens[index - 1].text == "of" &&
      tokens[index - 2].kind == TokenKind::word) {
    if (const auto* e = lexicon.lookup(tokens[index - 2].text); e && e->type == UoMType::count) {
      return {UoMType::count, e->token};
    }
  }
  return {};
}

std::vector<CandidateQuantity> find_candidates_in(const std::string& attribute, std::string_view text,
                                                  const UnitLexicon& lexicon) {
  const auto tokens = tokenize(text);
  std::vector<CandidateQuantity> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind != TokenKind::number || !(tokens[i].value > 0)) continue;
    auto cue = cue_for_numeral(tokens, i, lexicon);
    out.push_back({tokens[i].value, attribute, tokens[i].start, tokens[i].end, cue.type, std::move(cue.unit)});
  }
  return out;
}

std::vector<CandidateQuantity> find_candidates(const ProductRecord& record, const UnitLexicon& lexicon,
                                               const std::vector<std::string>& attributes) {
  std::vector<CandidateQuantity> out;
  auto run = [&](const std::string& name, const std::string& text) {
    auto part = find_candidates_in(name, text, lexicon);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  };
  if (attributes.empty()) {
    for (const auto& [name, text] : record.attributes) run(name, text);
  } else {
    for (const auto& name : attributes)
      if (const auto* text = record.attribute(name)) run(name, *text);
  }
  return out;
}

std::optional<double> parse_numeral(std::u32string_view slice) {
  const auto tokens = tokenize(slice);
  if (tokens.size() != 1 || tokens[0].kind != TokenKind::number) return std::nullopt;
  if (tokens[0].start != 0 || tokens[0].end != slice.size()) return std::nullopt;
  return tokens[0].value;
}

UnitCue span_uom_type(std::string_view text, std::size_t start, std::size_t end, const UnitLexicon& lexicon) {
  const auto tokens = tokenize(text);
  std::optional<std::size_t> hit;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind == TokenKind::number && tokens[i].start >= start && tokens[i].end <= end) hit = i;
  }
  if (!hit) return {};
  return cue_for_numeral(tokens, *hit, lexicon);
}

}  // namespace ppu
