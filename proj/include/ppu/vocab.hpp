#pragma once

#include <cstdint>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ppu {

// The 128-entry character inventory shared by both subnetworks. Index 0 is
// padding and index 1 is the unknown-character bucket; the remaining entries
// are space, a-z, 0-9, ASCII punctuation and accented Latin letters and
// symbols common in European catalogs. Uppercase input folds to lowercase.
class CharVocab {
 public:
  static constexpr int kPadIndex = 0;
  static constexpr int kUnknownIndex = 1;
  static constexpr std::size_t kSize = 128;

  explicit CharVocab(std::vector<char32_t> entries);
  static const CharVocab& standard();

  std::size_t size() const { return entries_.size(); }
  const std::vector<char32_t>& entries() const { return entries_; }
  int index_of(char32_t c) const;
  char32_t char_at(int index) const { return entries_.at(static_cast<std::size_t>(index)); }
  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  std::vector<char32_t> entries_;
  std::unordered_map<char32_t, int> index_;
  std::uint64_t fingerprint_ = 0;
};

struct EncodedText {
  std::vector<int> ids;
  std::size_t length = 0;  // true length before any padding (== ids.size())
};

// Lowercases, maps newline/tab to space, unknown characters to
// kUnknownIndex, truncates to max_len. One id per code point, so id
// positions coincide with character offsets.
EncodedText encode_text(std::string_view utf8, const CharVocab& vocab, std::size_t max_len);
EncodedText encode_text(std::u32string_view text, const CharVocab& vocab, std::size_t max_len);

// Right-pads with kPadIndex up to n (no-op when already >= n).
std::vector<int> pad_ids(const EncodedText& text, std::size_t n);

}  // namespace ppu
