// Unit lexicon, word/numeral tokenizer and numeral candidates with their
// locally cued UoM type.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ppu/record.hpp"

namespace ppu {

struct UnitEntry {
  std::string token;  // lowercase; multi-word units use a single space ("fl oz")
  UoMType type = UoMType::count;
  double factor = 1.0;  // to grams, millilitres, or 1 for count
};

class UnitLexicon {
 public:
  // Throws std::invalid_argument on duplicate tokens or non-positive factors.
  explicit UnitLexicon(std::vector<UnitEntry> entries);

  static const UnitLexicon& standard();
  // CSV rows "token,type,factor"; '#' starts a comment. Throws DataError.
  static UnitLexicon from_file(const std::filesystem::path& path);
  static UnitLexicon from_csv(std::string_view text);

  const UnitEntry* lookup(std::string_view token) const;
  const std::vector<UnitEntry>& entries() const { return entries_; }
  std::size_t max_words() const { return max_words_; }

 private:
  std::vector<UnitEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t max_words_ = 1;
};

// "g", "ml" or "count".
std::string_view base_unit(UoMType t);

enum class TokenKind { word, number, punct };

struct Token {
  TokenKind kind = TokenKind::punct;
  std::size_t start = 0;  // code points, [start, end)
  std::size_t end = 0;
  std::string text;  // case-folded UTF-8
  double value = 0;  // numbers only
};

// Words are runs of letters, numbers are digit runs with at most one '.' or
// ',' separator; every other non-space character is its own punct token.
// A ',' followed by exactly three digits is a thousands separator; any
// other ',' between digits is a decimal comma.
std::vector<Token> tokenize(std::u32string_view text);
std::vector<Token> tokenize(std::string_view utf8);

struct UnitCue {
  UoMType type = UoMType::count;
  std::optional<std::string> unit;  // lexicon token that supplied the cue
};

// Cue for the numeral at tokens[index]: the first lexicon unit among the next
// two word tokens (bigrams before unigrams, stopping at the next numeral),
// else "<count unit> of N", else count with no unit.
UnitCue cue_for_numeral(const std::vector<Token>& tokens, std::size_t index, const UnitLexicon& lexicon);

struct CandidateQuantity {
  double value = 0;
  std::string attribute;
  std::size_t start = 0;
  std::size_t end = 0;
  UoMType cued_type = UoMType::count;
  std::optional<std::string> cue_unit;

  bool operator==(const CandidateQuantity&) const = default;
};

std::vector<CandidateQuantity> find_candidates_in(const std::string& attribute, std::string_view text,
                                                  const UnitLexicon& lexicon);
// All attributes in record order, or only `attributes` when non-empty.
std::vector<CandidateQuantity> find_candidates(const ProductRecord& record, const UnitLexicon& lexicon,
                                               const std::vector<std::string>& attributes = {});

// Numeral value of text[start, end) if the slice is exactly one numeral.
std::optional<double> parse_numeral(std::u32string_view slice);

// UoM type and unit for a span over `text`, using the same cue rule as
// find_candidates. Spans not covering a numeral get count with no unit.
UnitCue span_uom_type(std::string_view text, std::size_t start, std::size_t end, const UnitLexicon& lexicon);

}  // namespace ppu
