// Weak span labels: choose the candidate quantities whose product is the
// audited total.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ppu/lexicon.hpp"
#include "ppu/record.hpp"

namespace ppu {

struct QualifiedSpans {
  std::vector<CandidateQuantity> spans;
  double product = 1.0;  // in the gold total's unit
  // True when the spans are a usable label: either a combination was found
  // or the record is count with total 1 (which needs no span).
  bool qualified = false;
};

// Tries combination sizes 3, 2, 1 in that order, combinations in
// lexicographic index order over `candidates`. A combination qualifies when
// its product equals the total (relative 1e-9, weight/volume values converted
// to the total's unit) and, for count, holds no weight/volume candidate; for
// weight/volume, holds exactly one, of the gold type.
QualifiedSpans qualify_spans(const std::vector<CandidateQuantity>& candidates, const GoldTotal& total, UoMType uom,
                             const UnitLexicon& lexicon);

// Value of a candidate in the unit `unit` of a `uom` total, or nullopt if the
// candidate's type cannot take part in such a total.
std::optional<double> candidate_value_in(const CandidateQuantity& c, const std::string& unit, UoMType uom,
                                         const UnitLexicon& lexicon);

// Span labels for a record with gold UoM and total, searching candidates in
// `attributes`. nullopt when the record is unlabeled or unqualifiable.
std::optional<std::vector<GoldSpan>> tag_record(const ProductRecord& record, const UnitLexicon& lexicon,
                                                const std::vector<std::string>& attributes = {"title"});

}  // namespace ppu
