// Label-preserving text noise: random gibberish and UoM-flavoured distractor
// words are inserted and non-span words deleted.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "ppu/record.hpp"

namespace ppu {

struct NoiseConfig {
  double insert_prob = 0.0;  // per eligible word boundary
  double delete_prob = 0.0;  // per eligible word
  double distractor_share = 0.3;  // inserted words drawn from `distractors`
  std::vector<std::string> distractors{"ml", "kg", "gm", "oz", "pack", "count", "litre", "gram", "pcs", "ltr"};
  // Words within this many positions of a gold span are never deleted and
  // no insertion lands next to them (keeps unit cues intact).
  std::size_t guard_words = 2;
};

struct NoisedRecord {
  ProductRecord record;
  std::vector<GoldSpan> spans;
};

struct TextEdit {
  enum class Kind { insert, remove };
  std::string attribute;
  Kind kind = Kind::insert;
  // Whitespace-separated word index in the original text. Inserts go before
  // that word (index == word count appends); removals drop it.
  std::size_t word = 0;
  std::string text;  // inserted word
};

// Applies edits (all indices refer to the original text). A removal of a
// word overlapping a gold span is skipped; `skipped` counts such edits.
NoisedRecord apply_edits(const ProductRecord& record, const std::vector<GoldSpan>& spans,
                         const std::vector<TextEdit>& edits, std::size_t* skipped = nullptr);

// Spans must lie inside their attribute's text (std::invalid_argument
// otherwise). Every output span covers the same substring as its input.
NoisedRecord noise_text(const ProductRecord& record, const std::vector<GoldSpan>& spans, const NoiseConfig& config,
                        std::mt19937_64& rng);

}  // namespace ppu
