#include "ppu/aggregate.hpp"

#include <cmath>
#include <set>

namespace ppu {

bool nearly_equal(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

std::optional<double> to_base_units(double value, const std::string& unit, UoMType uom, const UnitLexicon& lexicon) {
  if (uom == UoMType::count) {
    if (unit.empty() || unit == "count") return value;
    const auto* e = lexicon.lookup(unit);
    if (e && e->type == UoMType::count) return value;
    return std::nullopt;
  }
  if (unit == base_unit(uom)) return value;
  const auto* e = lexicon.lookup(unit);
  if (!e || e->type != uom) return std::nullopt;
  return value * e->factor;
}

TypedQuantity typed_from_candidate(const CandidateQuantity& c) {
  return {c.value, c.cued_type, c.cued_type == UoMType::count ? std::string("count") : c.cue_unit.value_or("")};
}

namespace {

// Removes exact duplicates while keeping text order.
std::vector<double> distinct(const std::vector<double>& values) {
  std::vector<double> out;
  for (double v : values) {
    bool seen = false;
    for (double u : out) seen = seen || nearly_equal(u, v);
    if (!seen) out.push_back(v);
  }
  return out;
}

}  // namespace

std::optional<TotalQuantity> aggregate_total(const std::vector<TypedQuantity>& spans, UoMType predicted,
                                             const UnitLexicon& lexicon, std::vector<std::string>* warnings) {
  std::vector<double> counts;
  std::vector<double> measures;  // base units
  std::vector<double> raw;       // as written
  std::set<std::string> units;
  for (const auto& s : spans) {
    if (!(s.value > 0) || !std::isfinite(s.value)) continue;
    if (s.type == UoMType::count) {
      counts.push_back(s.value);
      continue;
    }
    if (predicted == UoMType::count) continue;
    if (s.type != predicted) {
      if (warnings) {
        warnings->push_back("ignored " + std::string(to_string(s.type)) + " span under " +
                            std::string(to_string(predicted)) + " prediction");
      }
      continue;
    }
    const auto base = to_base_units(s.value, s.unit, s.type, lexicon);
    if (!base) {
      if (warnings) warnings->push_back("ignored span with unknown unit '" + s.unit + "'");
      continue;
    }
    measures.push_back(*base);
    raw.push_back(s.value);
    units.insert(s.unit);
  }

  double count_product = 1.0;
  for (double c : distinct(counts)) count_product *= c;

  if (predicted == UoMType::count) return TotalQuantity{count_product, "count", UoMType::count};
  if (measures.empty()) return std::nullopt;

  // A single shared source unit is kept as written so 42.5 oz x 2 stays 85 oz.
  const bool shared_unit = units.size() == 1 && !units.begin()->empty();
  std::vector<double> stack = distinct(shared_unit ? raw : measures);
  double total = 0.0;
  while (!stack.empty()) {
    total += stack.front();
    stack.erase(stack.begin());
    std::erase_if(stack, [&](double v) { return nearly_equal(v, total); });
  }
  total *= count_product;

  const std::string unit = shared_unit ? *units.begin() : std::string(base_unit(predicted));
  return TotalQuantity{total, unit, predicted};
}

bool totals_match(const TotalQuantity& predicted, UoMType gold_uom, const GoldTotal& gold, const UnitLexicon& lexicon,
                  double rel) {
  if (predicted.uom != gold_uom) return false;
  const auto p = to_base_units(predicted.value, predicted.unit, predicted.uom, lexicon);
  const auto g = to_base_units(gold.value, gold.unit, gold_uom, lexicon);
  return p && g && nearly_equal(*p, *g, rel);
}

}  // namespace ppu
