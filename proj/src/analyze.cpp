#include "ppu/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ppu/tagger.hpp"

namespace ppu {

AmbiguityTokens AmbiguityTokens::from_lexicon(const UnitLexicon& lexicon) {
  AmbiguityTokens t;
  for (const auto& e : lexicon.entries()) {
    if (e.type == UoMType::weight) t.weight.insert(e.token);
    if (e.type == UoMType::volume) t.volume.insert(e.token);
  }
  t.volume.insert("fluid");
  return t;
}

const AmbiguityTokens& AmbiguityTokens::standard() {
  static const AmbiguityTokens tokens = from_lexicon(UnitLexicon::standard());
  return tokens;
}

std::set<std::string> title_words(std::string_view title, const AmbiguityTokens& tokens) {
  std::vector<std::string> words;
  for (auto& t : tokenize(title))
    if (t.kind == TokenKind::word) words.push_back(std::move(t.text));
  std::set<std::string> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i + 1 < words.size()) {
      const std::string bigram = words[i] + " " + words[i + 1];
      if (tokens.weight.count(bigram) || tokens.volume.count(bigram)) {
        out.insert(bigram);
        ++i;
        continue;
      }
    }
    out.insert(words[i]);
  }
  return out;
}

int ambiguity(const std::set<std::string>& words, UoMType k, const AmbiguityTokens& tokens) {
  bool has_w = false, has_v = false;
  for (const auto& w : words) {
    has_w = has_w || tokens.weight.count(w);
    has_v = has_v || tokens.volume.count(w);
  }
  if (has_w && k == UoMType::volume) return 1;
  if (has_v && k == UoMType::weight) return 1;
  if ((has_w || has_v) && k == UoMType::count) return 1;
  return 0;
}

int record_ambiguity(const ProductRecord& record, const AmbiguityTokens& tokens) {
  if (!record.gold_uom) return 0;
  const auto* title = record.attribute("title");
  return ambiguity(title_words(title ? *title : std::string(), tokens), *record.gold_uom, tokens);
}

nlohmann::ordered_json DatasetStats::to_json() const {
  nlohmann::ordered_json j;
  j["records"] = records;
  j["labeled"] = labeled;
  j["ambiguous"] = ambiguous;
  j["ambiguity_share"] = ambiguity_share();
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto t : kAllUoMTypes) {
    const std::string name(to_string(t));
    const auto total = per_uom.count(name) ? per_uom.at(name) : 0;
    const auto hard = ambiguous_per_uom.count(name) ? ambiguous_per_uom.at(name) : 0;
    per[name] = {{"records", total}, {"ambiguous", hard}, {"share", total ? double(hard) / double(total) : 0.0}};
  }
  j["per_uom"] = per;
  nlohmann::ordered_json cats = nlohmann::ordered_json::object();
  for (const auto& [name, counts] : per_category) {
    cats[name] = {{"records", counts.second},
                  {"ambiguous", counts.first},
                  {"share", counts.second ? double(counts.first) / double(counts.second) : 0.0}};
  }
  j["per_category"] = cats;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [k, v] : span_histogram) hist[std::to_string(k)] = v;
  j["span_histogram"] = hist;
  j["unqualifiable"] = unqualifiable;
  return j;
}

std::string DatasetStats::span_histogram_csv() const {
  std::ostringstream s;
  s << "spans,records,share\n";
  std::size_t total = 0;
  for (const auto& [k, v] : span_histogram) total += v;
  for (const auto& [k, v] : span_histogram) s << k << ',' << v << ',' << (total ? double(v) / double(total) : 0.0) << '\n';
  return s.str();
}

std::string DatasetStats::category_csv() const {
  std::ostringstream s;
  s << "category,records,ambiguous,share\n";
  for (const auto& [name, c] : per_category)
    s << name << ',' << c.second << ',' << c.first << ',' << (c.second ? double(c.first) / double(c.second) : 0.0)
      << '\n';
  return s.str();
}

DatasetStats dataset_stats(const std::vector<ProductRecord>& records, const SpanMap* spans,
                           const UnitLexicon& lexicon, const AmbiguityTokens& tokens) {
  DatasetStats st;
  st.records = records.size();
  for (const auto& r : records) {
    if (!r.gold_uom) continue;
    ++st.labeled;
    const std::string uom(to_string(*r.gold_uom));
    const int hard = record_ambiguity(r, tokens);
    ++st.per_uom[uom];
    st.ambiguous_per_uom[uom] += hard;
    st.ambiguous += hard;
    auto& cat = st.per_category[r.categories.empty() ? std::string("(none)") : r.categories.front()];
    cat.first += hard;
    ++cat.second;

    int span_count = 0;
    if (spans) {
      if (auto it = spans->find(r.id); it != spans->end()) span_count = static_cast<int>(it->second.size());
    } else if (r.gold_total) {
      const auto q = qualify_spans(find_candidates(r, lexicon, {"title"}), *r.gold_total, *r.gold_uom, lexicon);
      if (!q.qualified) {
        ++st.unqualifiable;
        continue;
      }
      span_count = static_cast<int>(q.spans.size());
    }
    ++st.span_histogram[span_count];
  }
  return st;
}

UpsampleSampler::UpsampleSampler(std::vector<bool> hard, double factor, std::uint64_t seed) : rng_(seed) {
  if (!(factor >= 1.0)) throw std::invalid_argument("upsample factor must be >= 1");
  for (std::size_t i = 0; i < hard.size(); ++i) (hard[i] ? hard_ : easy_).push_back(i);
  base_rate_ = hard.empty() ? 0.0 : double(hard_.size()) / double(hard.size());
  target_share_ = std::max(base_rate_, std::min(0.5, factor * base_rate_));
}

std::vector<std::size_t> UpsampleSampler::next_epoch() {
  std::vector<std::size_t> epoch = easy_;
  if (!hard_.empty()) {
    std::size_t slots = hard_.size();
    if (!easy_.empty()) {
      slots = static_cast<std::size_t>(std::llround(double(easy_.size()) * target_share_ / (1.0 - target_share_)));
    }
    for (std::size_t s = 0; s < slots; ++s) {
      if (hard_cursor_ == 0) std::shuffle(hard_.begin(), hard_.end(), rng_);
      epoch.push_back(hard_[hard_cursor_]);
      hard_cursor_ = (hard_cursor_ + 1) % hard_.size();
    }
  }
  std::shuffle(epoch.begin(), epoch.end(), rng_);
  return epoch;
}

}  // namespace ppu
