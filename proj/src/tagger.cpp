#include "ppu/tagger.hpp"

#include "ppu/aggregate.hpp"

namespace ppu {

std::optional<double> candidate_value_in(const CandidateQuantity& c, const std::string& unit, UoMType uom,
                                         const UnitLexicon& lexicon) {
  if (c.cued_type == UoMType::count) return c.value;
  if (c.cued_type != uom || !c.cue_unit) return std::nullopt;
  const auto base = to_base_units(c.value, *c.cue_unit, uom, lexicon);
  if (!base) return std::nullopt;
  if (*c.cue_unit == unit) return c.value;
  const auto per_unit = to_base_units(1.0, unit, uom, lexicon);
  if (!per_unit) return std::nullopt;
  return *base / *per_unit;
}

QualifiedSpans qualify_spans(const std::vector<CandidateQuantity>& candidates, const GoldTotal& total, UoMType uom,
                             const UnitLexicon& lexicon) {
  QualifiedSpans out;
  if (uom == UoMType::count && nearly_equal(total.value, 1.0)) {
    out.qualified = true;
    return out;
  }
  const std::size_t m = candidates.size();
  std::vector<std::optional<double>> values(m);
  for (std::size_t i = 0; i < m; ++i) values[i] = candidate_value_in(candidates[i], total.unit, uom, lexicon);

  auto try_combo = [&](const std::vector<std::size_t>& idx) {
    double product = 1.0;
    int measures = 0;
    for (std::size_t i : idx) {
      if (!values[i]) return false;
      if (candidates[i].cued_type != UoMType::count) ++measures;
      product *= *values[i];
    }
    if (uom == UoMType::count ? measures != 0 : measures != 1) return false;
    if (!nearly_equal(product, total.value)) return false;
    out.product = product;
    for (std::size_t i : idx) out.spans.push_back(candidates[i]);
    out.qualified = true;
    return true;
  };

  for (std::size_t k = std::min<std::size_t>(3, m); k >= 1; --k) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      if (try_combo(idx)) return out;
      // next combination in lexicographic order
      std::size_t pos = k;
      while (pos > 0 && idx[pos - 1] == m - k + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return out;
}

std::optional<std::vector<GoldSpan>> tag_record(const ProductRecord& record, const UnitLexicon& lexicon,
                                                const std::vector<std::string>& attributes) {
  if (!record.gold_uom || !record.gold_total) return std::nullopt;
  const auto q = qualify_spans(find_candidates(record, lexicon, attributes), *record.gold_total, *record.gold_uom, lexicon);
  if (!q.qualified) return std::nullopt;
  std::vector<GoldSpan> spans;
  for (const auto& c : q.spans) spans.push_back({c.attribute, c.start, c.end});
  return spans;
}

}  // namespace ppu
