// Title ambiguity, dataset statistics and the hard-example sampler.

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "ppu/lexicon.hpp"
#include "ppu/record.hpp"

namespace ppu {

struct AmbiguityTokens {
  std::set<std::string> weight;
  std::set<std::string> volume;

  // Weight and volume lexicon tokens, plus "fluid" for volume.
  static AmbiguityTokens from_lexicon(const UnitLexicon& lexicon);
  static const AmbiguityTokens& standard();
};

// Lowercased word set of a title. Two-word tokens known to `tokens` are
// matched as one entry before their parts are considered.
std::set<std::string> title_words(std::string_view title, const AmbiguityTokens& tokens);

// 1 if a weight token appears and k is volume, a volume token and k is
// weight, or any weight/volume token and k is count; otherwise 0.
int ambiguity(const std::set<std::string>& words, UoMType k, const AmbiguityTokens& tokens);
int record_ambiguity(const ProductRecord& record, const AmbiguityTokens& tokens = AmbiguityTokens::standard());

struct DatasetStats {
  std::size_t records = 0;
  std::size_t labeled = 0;
  std::size_t ambiguous = 0;
  std::map<std::string, std::size_t> per_uom;            // labeled records per type
  std::map<std::string, std::size_t> ambiguous_per_uom;  // hard records per type
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_category;  // (hard, total) by top category
  std::map<int, std::size_t> span_histogram;                                // spans per record -> records
  std::size_t unqualifiable = 0;  // records the tagger could not label

  double ambiguity_share() const { return labeled ? double(ambiguous) / double(labeled) : 0.0; }
  nlohmann::ordered_json to_json() const;
  std::string span_histogram_csv() const;
  std::string category_csv() const;
};

// `spans` is optional: when non-null it supplies the per-record span counts
// (by record id); otherwise the tagger's qualified spans are counted.
DatasetStats dataset_stats(const std::vector<ProductRecord>& records, const SpanMap* spans = nullptr,
                           const UnitLexicon& lexicon = UnitLexicon::standard(),
                           const AmbiguityTokens& tokens = AmbiguityTokens::standard());

// Epoch orders in which hard examples are drawn at f times their base rate
// (capped at half the epoch). Every non-hard example appears exactly once per
// epoch; hard examples fill the remaining slots cycling through a shuffled
// order, so the epoch length is non_hard / (1 - target share).
class UpsampleSampler {
 public:
  // Throws std::invalid_argument if factor < 1.
  UpsampleSampler(std::vector<bool> hard, double factor, std::uint64_t seed);

  std::vector<std::size_t> next_epoch();
  double target_share() const { return target_share_; }
  double base_rate() const { return base_rate_; }

 private:
  std::vector<std::size_t> easy_, hard_;
  double base_rate_ = 0, target_share_ = 0;
  std::size_t hard_cursor_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace ppu
