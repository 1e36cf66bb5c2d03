#include "ppu/rules.hpp"

namespace ppu {

bool Guardrails::allows(UoMType type, double v) const {
  switch (type) {
    case UoMType::weight:
      return v >= weight_min_g && v <= weight_max_g;
    case UoMType::volume:
      return v >= volume_min_ml && v <= volume_max_ml;
    case UoMType::count:
      return v >= count_min && v <= count_max;
  }
  return false;
}

namespace {

std::vector<const std::string*> texts(const ProductRecord& record, const RulesConfig& config) {
  std::vector<const std::string*> out;
  for (const auto& name : config.attributes)
    if (const auto* t = record.attribute(name)) out.push_back(t);
  return out;
}

}  // namespace

UoMType classify_uom_rules(const ProductRecord& record, const UnitLexicon& lexicon, const RulesConfig& config) {
  for (const auto& c : find_candidates(record, lexicon, config.attributes))
    if (c.cue_unit) return c.cued_type;

  bool weight = false, volume = false;
  for (const auto* text : texts(record, config)) {
    const auto tokens = tokenize(*text);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].kind != TokenKind::word) continue;
      if (tokens[i].text == "liquid" || tokens[i].text == "fluid") volume = true;
      const UnitEntry* e = nullptr;
      if (i + 1 < tokens.size() && tokens[i + 1].kind == TokenKind::word) {
        e = lexicon.lookup(tokens[i].text + " " + tokens[i + 1].text);
        if (e) ++i;
      }
      if (!e) e = lexicon.lookup(tokens[i].text);
      if (!e) continue;
      volume = volume || e->type == UoMType::volume;
      weight = weight || e->type == UoMType::weight;
    }
  }
  if (volume) return UoMType::volume;
  if (weight) return UoMType::weight;
  return UoMType::count;
}

std::optional<RulesExtraction> extract_quantities_rules(const ProductRecord& record, const UnitLexicon& lexicon,
                                                        const RulesConfig& config) {
  const UoMType uom = classify_uom_rules(record, lexicon, config);
  RulesExtraction out;
  std::vector<TypedQuantity> typed;
  for (const auto& c : find_candidates(record, lexicon, config.attributes)) {
    if (!c.cue_unit) continue;
    const auto tq = typed_from_candidate(c);
    const auto base = to_base_units(tq.value, tq.unit, tq.type, lexicon);
    if (!base || !config.guardrails.allows(tq.type, *base)) continue;
    typed.push_back(tq);
    out.used.push_back(c);
  }
  if (typed.empty()) return std::nullopt;
  const auto total = aggregate_total(typed, uom, lexicon);
  if (!total) return std::nullopt;
  const auto base = to_base_units(total->value, total->unit, total->uom, lexicon);
  if (!base || !config.guardrails.allows(total->uom, *base)) return std::nullopt;
  out.total = *total;
  return out;
}

}  // namespace ppu
