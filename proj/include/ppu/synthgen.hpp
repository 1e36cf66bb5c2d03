// Seeded generator of labeled synthetic catalog records.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ppu/lexicon.hpp"
#include "ppu/record.hpp"

namespace ppu {

enum class Locale { us, eu5, in };

std::string_view to_string(Locale l);
Locale parse_locale(std::string_view s);  // throws std::invalid_argument

// A numeral in a template. `number` slots draw from `values`; `measure`
// slots draw a unit and then a value from that unit's pool and render
// "<value> <unit>"; `derived` slots render the product of the named factor
// slots (in the unit of the first measure among them, if any).
struct QuantitySlot {
  enum class Kind { number, measure, derived };
  std::string name;
  Kind kind = Kind::number;
  std::vector<double> values;
  std::vector<std::pair<std::string, std::vector<double>>> units;
  std::vector<std::string> factors;
  bool gold = false;
};

struct TemplateSpec {
  std::string name;
  std::vector<std::string> categories;  // taxonomy path, top level first
  UoMType uom = UoMType::count;
  int span_count = 0;  // 0..3
  Locale locale = Locale::us;
  // Text with {key} placeholders naming a slot or a word list.
  std::string pattern;
  std::vector<QuantitySlot> slots;
  std::map<std::string, std::vector<std::string>> words;
  std::string description;  // same placeholder syntax, may be empty
  bool ambiguous = false;   // title tokens conflict with the UoM type
  bool additive = false;    // gold measures sum; the tagger cannot label these
  double frequency = 1.0;   // relative draw weight inside its bucket

  // Throws std::invalid_argument on unknown placeholders or bad slots.
  void validate() const;
};

struct SyntheticExample {
  ProductRecord record;
  std::vector<GoldSpan> spans;
  std::string template_name;
};

// One instantiation. Gold totals come from aggregating the gold slots; the
// result is checked against the tagger (same spans, or unqualifiable for
// additive templates), the declared span count and ambiguity, and redrawn
// until it agrees. Throws std::runtime_error if 200 draws all fail.
SyntheticExample generate_example(const TemplateSpec& spec, std::mt19937_64& rng,
                                  const UnitLexicon& lexicon = UnitLexicon::standard());

// Built-in library: every pattern instantiated for each locale it supports.
const std::vector<TemplateSpec>& template_library();

struct DatasetConfig {
  std::size_t n = 0;
  std::array<double, 4> span_mix{0.540, 0.345, 0.113, 0.002};
  double ambiguity_share = 0.21;
  std::optional<Locale> locale;  // nullopt mixes all locales
  std::uint64_t seed = 0;
  std::string id_prefix = "syn";
};

// Span-count buckets get exact largest-remainder quotas; ambiguous records
// are split 3/5 count, 1/5 weight, 1/5 volume. Throws std::invalid_argument
// if the mix is negative or does not sum to 1 (1e-6), or the share is
// outside [0, 1].
std::vector<SyntheticExample> generate_dataset(const DatasetConfig& config,
                                               const std::vector<TemplateSpec>& library = template_library(),
                                               const UnitLexicon& lexicon = UnitLexicon::standard());

// Largest-remainder integer split of n by `weights` (which must sum to 1).
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& weights);

}  // namespace ppu
