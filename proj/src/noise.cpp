#include "ppu/noise.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "ppu/text.hpp"

namespace ppu {

namespace {

struct Chunk {
  std::size_t start, end;  // code points of the non-space run
};

bool is_space(char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r'; }

std::vector<Chunk> chunks_of(const std::u32string& text) {
  std::vector<Chunk> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    out.push_back({i, j});
    i = j;
  }
  return out;
}

bool overlaps(const Chunk& c, const GoldSpan& s) { return c.start < s.end && s.start < c.end; }

std::string random_word(const NoiseConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (!cfg.distractors.empty() && u(rng) < cfg.distractor_share) {
    std::uniform_int_distribution<std::size_t> pick(0, cfg.distractors.size() - 1);
    return cfg.distractors[pick(rng)];
  }
  std::uniform_int_distribution<int> len(3, 8), letter(0, 25);
  std::string w(static_cast<std::size_t>(len(rng)), 'a');
  for (auto& c : w) c = static_cast<char>('a' + letter(rng));
  return w;
}

void check_spans(const ProductRecord& record, const std::vector<GoldSpan>& spans) {
  for (const auto& s : spans) {
    const auto* text = record.attribute(s.attribute);
    if (!text || s.end <= s.start || s.end > codepoint_length(*text)) {
      throw std::invalid_argument("noise_text: span outside attribute '" + s.attribute + "'");
    }
  }
}

}  // namespace

NoisedRecord apply_edits(const ProductRecord& record, const std::vector<GoldSpan>& spans,
                         const std::vector<TextEdit>& edits, std::size_t* skipped) {
  check_spans(record, spans);
  NoisedRecord out{record, spans};
  std::size_t skip_count = 0;
  for (auto& [name, utf8] : out.record.attributes) {
    const std::u32string text = utf8_decode(utf8);
    const auto chunks = chunks_of(text);
    const std::size_t m = chunks.size();

    std::map<std::size_t, std::vector<std::u32string>> inserts;
    std::vector<bool> removed(m, false);
    for (const auto& e : edits) {
      if (e.attribute != name) continue;
      if (e.kind == TextEdit::Kind::insert) {
        if (e.word > m) throw std::invalid_argument("apply_edits: insert position past end");
        inserts[e.word].push_back(utf8_decode(e.text));
        continue;
      }
      if (e.word >= m) throw std::invalid_argument("apply_edits: word index out of range");
      bool hits_span = false;
      for (const auto& s : spans) hits_span = hits_span || (s.attribute == name && overlaps(chunks[e.word], s));
      if (hits_span) {
        ++skip_count;
      } else {
        removed[e.word] = true;
      }
    }
    if (inserts.empty() && std::find(removed.begin(), removed.end(), true) == removed.end()) continue;

    std::u32string result;
    std::vector<long long> shift(text.size() + 1, 0);
    std::size_t copied = 0;
    auto copy_to = [&](std::size_t end) {
      for (; copied < end; ++copied) {
        shift[copied] = static_cast<long long>(result.size()) - static_cast<long long>(copied);
        result.push_back(text[copied]);
      }
    };
    for (std::size_t b = 0; b <= m; ++b) {
      if (auto it = inserts.find(b); it != inserts.end()) {
        const std::size_t at = b < m ? chunks[b].start : text.size();
        copy_to(at);
        for (const auto& w : it->second) {
          if (b < m) {
            result += w;
            result.push_back(U' ');
          } else {
            result.push_back(U' ');
            result += w;
          }
        }
      }
      if (b == m) break;
      if (removed[b]) {
        copy_to(chunks[b].start);
        std::size_t skip = chunks[b].end;
        while (skip < text.size() && is_space(text[skip])) ++skip;
        copied = skip;
      }
    }
    copy_to(text.size());

    for (auto& s : out.spans) {
      if (s.attribute != name) continue;
      const long long d = shift[s.start];
      s.start = static_cast<std::size_t>(static_cast<long long>(s.start) + d);
      s.end = static_cast<std::size_t>(static_cast<long long>(s.end) + d);
    }
    utf8 = utf8_encode(result);
  }
  if (skipped) *skipped = skip_count;
  return out;
}

NoisedRecord noise_text(const ProductRecord& record, const std::vector<GoldSpan>& spans, const NoiseConfig& config,
                        std::mt19937_64& rng) {
  check_spans(record, spans);
  if (config.insert_prob <= 0.0 && config.delete_prob <= 0.0) return {record, spans};

  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TextEdit> edits;
  for (const auto& [name, utf8] : record.attributes) {
    const auto chunks = chunks_of(utf8_decode(utf8));
    const std::size_t m = chunks.size();
    // Words near a span stay put and get no neighbours, so unit cues survive.
    std::vector<bool> guarded(m, false);
    for (const auto& s : spans) {
      if (s.attribute != name) continue;
      for (std::size_t c = 0; c < m; ++c) {
        if (!overlaps(chunks[c], s)) continue;
        const std::size_t lo = c >= config.guard_words ? c - config.guard_words : 0;
        const std::size_t hi = std::min(m - 1, c + config.guard_words);
        for (std::size_t g = lo; g <= hi; ++g) guarded[g] = true;
      }
    }
    for (std::size_t b = 0; b <= m; ++b) {
      const bool left_ok = b == 0 || !guarded[b - 1];
      const bool right_ok = b == m || !guarded[b];
      if (left_ok && right_ok && config.insert_prob > 0 && u(rng) < config.insert_prob) {
        edits.push_back({name, TextEdit::Kind::insert, b, random_word(config, rng)});
      }
      if (b < m && !guarded[b] && config.delete_prob > 0 && u(rng) < config.delete_prob) {
        edits.push_back({name, TextEdit::Kind::remove, b, {}});
      }
    }
  }
  return apply_edits(record, spans, edits);
}

}  // namespace ppu
