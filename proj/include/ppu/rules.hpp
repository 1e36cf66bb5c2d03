// Keyword and regex-style baseline for UoM type and total quantity.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ppu/aggregate.hpp"
#include "ppu/lexicon.hpp"
#include "ppu/record.hpp"

namespace ppu {

struct Guardrails {
  double weight_min_g = 0.1;
  double weight_max_g = 50000.0;
  double volume_min_ml = 1.0;
  double volume_max_ml = 20000.0;
  double count_min = 1.0;
  double count_max = 1000.0;

  // `base_value` in g, ml or count.
  bool allows(UoMType type, double base_value) const;
};

struct RulesConfig {
  // Attributes the baseline reads.
  std::vector<std::string> attributes{"title"};
  Guardrails guardrails;
};

// The first unit-cued numeral in text order decides; without one, keyword
// hits in priority volume > weight > count; default count.
UoMType classify_uom_rules(const ProductRecord& record, const UnitLexicon& lexicon = UnitLexicon::standard(),
                           const RulesConfig& config = {});

struct RulesExtraction {
  TotalQuantity total;
  std::vector<CandidateQuantity> used;
};

// Unit-cued quantities that pass the guardrails, aggregated under the rule
// classifier's UoM type. nullopt (abstain) when nothing usable remains or the
// aggregate itself breaks a guardrail.
std::optional<RulesExtraction> extract_quantities_rules(const ProductRecord& record,
                                                        const UnitLexicon& lexicon = UnitLexicon::standard(),
                                                        const RulesConfig& config = {});

}  // namespace ppu
