#include "ppu/vocab.hpp"

#include <stdexcept>
#include <string>

#include "ppu/params.hpp"
#include "ppu/text.hpp"

namespace ppu {

namespace {

std::vector<char32_t> standard_entries() {
  std::vector<char32_t> e{U'\0', 0xFFFD, U' '};
  for (char32_t c = U'a'; c <= U'z'; ++c) e.push_back(c);
  for (char32_t c = U'0'; c <= U'9'; ++c) e.push_back(c);
  for (char32_t c : std::u32string_view(U"!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~")) e.push_back(c);
  for (char32_t c : std::u32string_view(U"àâäçèéêëîïôöùûüñáíóúìòßœ")) e.push_back(c);
  for (char32_t c : std::u32string_view(U"ãõåæøÿýšžčćłńśźżęąőűşřěů¿¡«»€£°µ×")) e.push_back(c);
  return e;
}

}  // namespace

CharVocab::CharVocab(std::vector<char32_t> entries) : entries_(std::move(entries)) {
  if (entries_.size() != kSize) {
    throw std::invalid_argument("character vocabulary must have exactly 128 entries, got " +
                                std::to_string(entries_.size()));
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i], static_cast<int>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary entry U+" + std::to_string(entries_[i]));
    }
  }
  const std::string bytes = utf8_encode(std::u32string_view(entries_.data(), entries_.size()));
  fingerprint_ = fnv1a(bytes.data(), bytes.size());
}

const CharVocab& CharVocab::standard() {
  static const CharVocab vocab(standard_entries());
  return vocab;
}

int CharVocab::index_of(char32_t c) const {
  if (c == U'\n' || c == U'\t' || c == U'\r') c = U' ';
  c = fold_case(c);
  if (c == U'\0' || c == 0xFFFD) return kUnknownIndex;
  auto it = index_.find(c);
  return it == index_.end() ? kUnknownIndex : it->second;
}

EncodedText encode_text(std::u32string_view text, const CharVocab& vocab, std::size_t max_len) {
  if (max_len == 0) throw std::invalid_argument("encode_text: max_len must be >= 1");
  EncodedText out;
  const std::size_t n = std::min(text.size(), max_len);
  out.ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.ids.push_back(vocab.index_of(text[i]));
  out.length = n;
  return out;
}

EncodedText encode_text(std::string_view utf8, const CharVocab& vocab, std::size_t max_len) {
  return encode_text(std::u32string_view(utf8_decode(utf8)), vocab, max_len);
}

std::vector<int> pad_ids(const EncodedText& text, std::size_t n) {
  std::vector<int> ids = text.ids;
  if (ids.size() < n) ids.resize(n, CharVocab::kPadIndex);
  return ids;
}

}  // namespace ppu
