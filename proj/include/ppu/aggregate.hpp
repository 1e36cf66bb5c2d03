// Turns typed quantity spans and a UoM type into one total quantity.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ppu/lexicon.hpp"
#include "ppu/record.hpp"

namespace ppu {

struct TypedQuantity {
  double value = 0;
  UoMType type = UoMType::count;
  std::string unit;  // lexicon token; "count" (or empty) for count
};

struct TotalQuantity {
  double value = 0;
  std::string unit;  // "count" for count
  UoMType uom = UoMType::count;
};

// Relative-tolerance equality used for duplicate detection and comparisons.
bool nearly_equal(double a, double b, double rel = 1e-9);

// Weight and volume spans of the predicted type are summed after removing
// exact duplicates, dropping stack entries equal to the running sum at every
// step; count spans are multiplied. Weight/volume predictions multiply the
// two; count predictions return the count product (1 with no count spans).
// Returns nullopt when a weight/volume prediction has no spans of that type.
// Spans of the other weight/volume type are ignored and reported in
// `warnings` when given.
std::optional<TotalQuantity> aggregate_total(const std::vector<TypedQuantity>& spans, UoMType predicted,
                                             const UnitLexicon& lexicon,
                                             std::vector<std::string>* warnings = nullptr);

TypedQuantity typed_from_candidate(const CandidateQuantity& c);

// Value expressed in base units (g, ml, count); nullopt for an unknown unit
// or one whose type differs from `uom`.
std::optional<double> to_base_units(double value, const std::string& unit, UoMType uom, const UnitLexicon& lexicon);

// Same UoM type and equal value in base units within `rel`.
bool totals_match(const TotalQuantity& predicted, UoMType gold_uom, const GoldTotal& gold, const UnitLexicon& lexicon,
                  double rel = 1e-6);

}  // namespace ppu
