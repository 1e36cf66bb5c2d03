#include "ppu/synthgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "ppu/aggregate.hpp"
#include "ppu/analyze.hpp"
#include "ppu/rules.hpp"
#include "ppu/tagger.hpp"
#include "ppu/text.hpp"

namespace ppu {

std::string_view to_string(Locale l) {
  switch (l) {
    case Locale::us: return "us";
    case Locale::eu5: return "eu5";
    case Locale::in: return "in";
  }
  return "us";
}

Locale parse_locale(std::string_view s) {
  if (s == "us") return Locale::us;
  if (s == "eu5") return Locale::eu5;
  if (s == "in") return Locale::in;
  throw std::invalid_argument("unknown locale '" + std::string(s) + "' (expected us, eu5 or in)");
}

namespace {

std::vector<std::string> placeholders(const std::string& pattern) {
  std::vector<std::string> keys;
  for (std::size_t p = pattern.find('{'); p != std::string::npos; p = pattern.find('{', p + 1)) {
    const auto q = pattern.find('}', p);
    if (q == std::string::npos) throw std::invalid_argument("template: unclosed '{' in \"" + pattern + "\"");
    keys.push_back(pattern.substr(p + 1, q - p - 1));
  }
  return keys;
}

const QuantitySlot* find_slot(const TemplateSpec& spec, const std::string& name) {
  for (const auto& s : spec.slots)
    if (s.name == name) return &s;
  return nullptr;
}

}  // namespace

void TemplateSpec::validate() const {
  if (span_count < 0 || span_count > 3) throw std::invalid_argument(name + ": span_count must be 0..3");
  if (frequency <= 0) throw std::invalid_argument(name + ": frequency must be > 0");
  for (const auto* text : {&pattern, &description}) {
    for (const auto& key : placeholders(*text)) {
      if (!find_slot(*this, key) && !words.count(key)) {
        throw std::invalid_argument(name + ": unknown placeholder {" + key + "}");
      }
      if (auto it = words.find(key); it != words.end() && it->second.empty()) {
        throw std::invalid_argument(name + ": empty word list {" + key + "}");
      }
    }
  }
  for (const auto& s : slots) {
    if (s.kind == QuantitySlot::Kind::number && s.values.empty()) {
      throw std::invalid_argument(name + ": slot " + s.name + " has no values");
    }
    if (s.kind == QuantitySlot::Kind::measure) {
      if (s.units.empty()) throw std::invalid_argument(name + ": slot " + s.name + " has no units");
      for (const auto& [unit, pool] : s.units)
        if (pool.empty()) throw std::invalid_argument(name + ": slot " + s.name + " unit " + unit + " has no values");
    }
    if (s.kind == QuantitySlot::Kind::derived) {
      if (s.factors.empty()) throw std::invalid_argument(name + ": derived slot " + s.name + " has no factors");
      for (const auto& f : s.factors)
        if (!find_slot(*this, f)) throw std::invalid_argument(name + ": derived slot refers to unknown " + f);
    }
  }
}

namespace {

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

std::string format_number(double v, Locale locale) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  if (locale == Locale::eu5) std::replace(s.begin(), s.end(), '.', ',');
  return s;
}

struct Drawn {
  double value = 0;
  std::string unit;  // measure slots only
};

struct Rendered {
  std::string text;
  std::map<std::string, std::pair<std::size_t, std::size_t>> numerals;  // slot -> [start, end)
};

Rendered render(const std::string& pattern, const TemplateSpec& spec, const std::map<std::string, Drawn>& drawn,
                std::mt19937_64& rng) {
  Rendered out;
  std::size_t cp = 0;
  auto append = [&](const std::string& s) {
    out.text += s;
    cp += codepoint_length(s);
  };
  std::size_t pos = 0;
  while (pos < pattern.size()) {
    const auto open = pattern.find('{', pos);
    if (open == std::string::npos) {
      append(pattern.substr(pos));
      break;
    }
    append(pattern.substr(pos, open - pos));
    const auto close = pattern.find('}', open);
    const std::string key = pattern.substr(open + 1, close - open - 1);
    pos = close + 1;
    if (auto it = drawn.find(key); it != drawn.end()) {
      const std::string num = format_number(it->second.value, spec.locale);
      const std::size_t start = cp;
      append(num);
      out.numerals[key] = {start, cp};
      if (!it->second.unit.empty()) {
        // Indian listings often glue the unit to the number.
        const bool glue = spec.locale == Locale::in && std::uniform_int_distribution<int>(0, 2)(rng) == 0;
        append((glue ? "" : " ") + it->second.unit);
      }
    } else {
      append(pick(spec.words.at(key), rng));
    }
  }
  return out;
}

std::map<std::string, Drawn> draw_slots(const TemplateSpec& spec, std::mt19937_64& rng) {
  std::map<std::string, Drawn> drawn;
  for (const auto& s : spec.slots) {
    if (s.kind == QuantitySlot::Kind::number) {
      drawn[s.name] = {pick(s.values, rng), ""};
    } else if (s.kind == QuantitySlot::Kind::measure) {
      const auto& [unit, pool] = pick(s.units, rng);
      drawn[s.name] = {pick(pool, rng), unit};
    }
  }
  for (const auto& s : spec.slots) {
    if (s.kind != QuantitySlot::Kind::derived) continue;
    Drawn d{1.0, ""};
    for (const auto& f : s.factors) {
      const auto& src = drawn.at(f);
      d.value *= src.value;
      if (d.unit.empty()) d.unit = src.unit;
    }
    d.value = std::round(d.value * 1000) / 1000;
    drawn[s.name] = d;
  }
  return drawn;
}

}  // namespace

SyntheticExample generate_example(const TemplateSpec& spec, std::mt19937_64& rng, const UnitLexicon& lexicon) {
  const Guardrails guardrails;
  for (int attempt = 0; attempt < 200; ++attempt) {
    const auto drawn = draw_slots(spec, rng);
    const Rendered title = render(spec.pattern, spec, drawn, rng);

    const auto cands = find_candidates_in("title", title.text, lexicon);
    std::vector<CandidateQuantity> gold;
    bool aligned = true;
    for (const auto& s : spec.slots) {
      if (!s.gold) continue;
      const auto span = title.numerals.at(s.name);
      auto it = std::find_if(cands.begin(), cands.end(),
                             [&](const CandidateQuantity& c) { return c.start == span.first && c.end == span.second; });
      if (it == cands.end()) {
        aligned = false;
        break;
      }
      gold.push_back(*it);
    }
    if (!aligned) continue;
    std::sort(gold.begin(), gold.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    // Additive gold measures must be distinct or deduplication hides one.
    if (spec.additive) {
      std::set<double> seen;
      for (const auto& g : gold) seen.insert(g.value);
      if (seen.size() != gold.size()) continue;
    }

    std::vector<TypedQuantity> typed;
    for (const auto& g : gold) typed.push_back(typed_from_candidate(g));
    const auto total = aggregate_total(typed, spec.uom, lexicon);
    if (!total) continue;
    const auto base = to_base_units(total->value, total->unit, spec.uom, lexicon);
    if (!base || !guardrails.allows(spec.uom, *base)) continue;

    SyntheticExample ex;
    ex.template_name = spec.name;
    auto& r = ex.record;
    r.set_attribute("title", title.text);
    if (!spec.description.empty()) r.set_attribute("description", render(spec.description, spec, drawn, rng).text);
    r.categories = spec.categories;
    r.gold_uom = spec.uom;
    r.gold_total = GoldTotal{total->value, total->unit};

    const auto tagged = qualify_spans(cands, *r.gold_total, spec.uom, lexicon);
    if (spec.additive) {
      if (tagged.qualified) continue;
    } else {
      if (!tagged.qualified || tagged.spans.size() != gold.size()) continue;
      bool same = true;
      for (std::size_t i = 0; i < gold.size(); ++i)
        same = same && tagged.spans[i].start == gold[i].start && tagged.spans[i].end == gold[i].end;
      if (!same) continue;
    }
    if (static_cast<int>(gold.size()) != spec.span_count) continue;
    if ((record_ambiguity(r) == 1) != spec.ambiguous) continue;

    for (const auto& g : gold) ex.spans.push_back({"title", g.start, g.end});
    return ex;
  }
  throw std::runtime_error("template " + spec.name + " (" + std::string(to_string(spec.locale)) +
                           "): no consistent draw in 200 attempts");
}

std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& weights) {
  std::vector<std::size_t> out(weights.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] * double(n);
    out[i] = static_cast<std::size_t>(std::floor(exact));
    used += out[i];
    rem.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n && k < rem.size(); ++k, ++used) ++out[rem[k].second];
  return out;
}

std::vector<SyntheticExample> generate_dataset(const DatasetConfig& config, const std::vector<TemplateSpec>& library,
                                               const UnitLexicon& lexicon) {
  double mix_sum = 0;
  for (double m : config.span_mix) {
    if (m < 0) throw std::invalid_argument("span mix entries must be >= 0");
    mix_sum += m;
  }
  if (std::abs(mix_sum - 1.0) > 1e-6) throw std::invalid_argument("span mix must sum to 1");
  if (config.ambiguity_share < 0 || config.ambiguity_share > 1) {
    throw std::invalid_argument("ambiguity share must be in [0, 1]");
  }
  std::mt19937_64 rng(config.seed);

  std::vector<const TemplateSpec*> pool;
  for (const auto& t : library)
    if (!config.locale || t.locale == *config.locale) pool.push_back(&t);
  if (pool.empty()) throw std::invalid_argument("no templates for the requested locale");

  // Slot plan: bucket per record, then the ambiguous ones and their UoM.
  const auto quotas = apportion(config.n, {config.span_mix.begin(), config.span_mix.end()});
  std::vector<int> bucket;
  for (int b = 0; b < 4; ++b) bucket.insert(bucket.end(), quotas[b], b);
  std::shuffle(bucket.begin(), bucket.end(), rng);

  std::vector<std::optional<UoMType>> hard(config.n);
  std::vector<std::size_t> zero, mid;
  for (std::size_t i = 0; i < config.n; ++i) {
    if (bucket[i] == 0) zero.push_back(i);
    if (bucket[i] == 1 || bucket[i] == 2) mid.push_back(i);
  }
  std::shuffle(zero.begin(), zero.end(), rng);
  std::shuffle(mid.begin(), mid.end(), rng);
  const auto hard_total = static_cast<std::size_t>(std::llround(config.ambiguity_share * double(config.n)));
  const auto by_type = apportion(hard_total, {0.2, 0.2, 0.6});  // weight, volume, count
  std::size_t m = 0;
  for (int t = 0; t < 2; ++t)
    for (std::size_t k = 0; k < by_type[t] && m < mid.size(); ++k) hard[mid[m++]] = kAllUoMTypes[t];
  const std::size_t mid_left = mid.size() - m;
  const std::size_t count_hard = by_type[2];
  const std::size_t from_zero =
      zero.size() + mid_left == 0
          ? 0
          : std::min(zero.size(), static_cast<std::size_t>(std::llround(double(count_hard) * double(zero.size()) /
                                                                        double(zero.size() + mid_left))));
  for (std::size_t k = 0; k < from_zero; ++k) hard[zero[k]] = UoMType::count;
  for (std::size_t k = 0; k < count_hard - from_zero && m < mid.size(); ++k) hard[mid[m++]] = UoMType::count;

  auto choose = [&](int b, const std::optional<UoMType>& h) -> const TemplateSpec* {
    std::vector<const TemplateSpec*> fits;
    for (const auto* t : pool)
      if (t->span_count == b && t->ambiguous == h.has_value() && (!h || t->uom == *h)) fits.push_back(t);
    if (fits.empty() && h) {
      for (const auto* t : pool)
        if (t->span_count == b && t->ambiguous) fits.push_back(t);
    }
    if (fits.empty()) {
      for (const auto* t : pool)
        if (t->span_count == b && !t->ambiguous) fits.push_back(t);
    }
    if (fits.empty()) return nullptr;
    std::vector<double> w;
    for (const auto* t : fits) w.push_back(t->frequency);
    std::discrete_distribution<std::size_t> d(w.begin(), w.end());
    return fits[d(rng)];
  };

  std::vector<SyntheticExample> out;
  out.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    const TemplateSpec* t = choose(bucket[i], hard[i]);
    if (!t) throw std::invalid_argument("no template with " + std::to_string(bucket[i]) + " spans for this locale");
    auto ex = generate_example(*t, rng, lexicon);
    char id[32];
    std::snprintf(id, sizeof id, "-%06zu", i + 1);
    ex.record.id = config.id_prefix + id;
    out.push_back(std::move(ex));
  }
  return out;
}

// ---- template library -------------------------------------------------------

namespace {

using W = std::vector<std::string>;
using Units = std::vector<std::pair<std::string, std::vector<double>>>;

QuantitySlot number(std::string name, std::vector<double> values, bool gold) {
  QuantitySlot s;
  s.name = std::move(name);
  s.values = std::move(values);
  s.gold = gold;
  return s;
}

QuantitySlot measure(std::string name, Units units, bool gold) {
  QuantitySlot s;
  s.name = std::move(name);
  s.kind = QuantitySlot::Kind::measure;
  s.units = std::move(units);
  s.gold = gold;
  return s;
}

QuantitySlot derived(std::string name, std::vector<std::string> factors) {
  QuantitySlot s;
  s.name = std::move(name);
  s.kind = QuantitySlot::Kind::derived;
  s.factors = std::move(factors);
  return s;
}

W brands(Locale l) {
  switch (l) {
    case Locale::us:
      return {"Maple Grove", "Blue Harbor", "Sunridge", "Golden Valley", "Northfield", "Clearbrook", "Summit Farms",
              "Evergreen", "Prairie Rose", "Cedar Lane"};
    case Locale::eu5:
      return {"Belle Rivière", "Maison Dorée", "Casa Núñez", "Bergström", "Alpenhöhe", "Dolce Campo", "Château Vert",
              "Señorío", "Fleur de Provence", "Münchner Hof"};
    case Locale::in:
      return {"Desi Rasoi", "Shree Annapurna", "Ganga Valley", "Sattvik", "Kesar Bagh", "Rasraj", "Gau Dhara",
              "Vedic Roots", "Mysore Mandi", "Amrit Kalash"};
  }
  return {};
}

// Weight units and pools per locale: small packs and bulk packs.
Units weight_small(Locale l) {
  switch (l) {
    case Locale::us: return {{"oz", {1.4, 3.5, 6, 8, 12, 16, 24}}};
    case Locale::eu5: return {{"g", {100, 125, 150, 200, 250, 400, 500, 750}}};
    case Locale::in: return {{"gm", {50, 100, 200, 250, 500}}, {"g", {100, 200, 500}}};
  }
  return {};
}

Units weight_bulk(Locale l) {
  switch (l) {
    case Locale::us: return {{"lb", {1, 2, 5, 10}}, {"oz", {24, 32, 42.5}}};
    case Locale::eu5: return {{"kg", {1, 1.5, 2, 2.5, 5}}, {"g", {500, 750}}};
    case Locale::in: return {{"kg", {1, 2, 5, 10}}, {"gm", {500}}};
  }
  return {};
}

Units weight_spice(Locale l) {
  switch (l) {
    case Locale::us: return {{"oz", {1.5, 2, 2.5, 4}}};
    case Locale::eu5: return {{"g", {40, 50, 75, 100}}};
    case Locale::in: return {{"gm", {50, 100, 200}}, {"g", {100, 200}}};
  }
  return {};
}

Units volume_bottle(Locale l) {
  switch (l) {
    case Locale::us: return {{"fl oz", {8, 12, 16.9, 20, 33.8}}, {"ml", {250, 500}}};
    case Locale::eu5: return {{"ml", {200, 250, 400, 500, 750}}, {"l", {1, 1.5}}};
    case Locale::in: return {{"ml", {100, 180, 200, 340, 500}}, {"ltr", {1}}};
  }
  return {};
}

Units volume_bulk(Locale l) {
  switch (l) {
    case Locale::us: return {{"fl oz", {33.8, 64}}, {"gallon", {1}}};
    case Locale::eu5: return {{"l", {1, 1.5, 2, 3, 5}}};
    case Locale::in: return {{"ltr", {1, 2, 5}}, {"l", {1, 5}}};
  }
  return {};
}

Units volume_small(Locale l) {
  switch (l) {
    case Locale::us: return {{"fl oz", {6.75, 8, 11}}, {"ml", {200, 250, 330}}};
    case Locale::eu5: return {{"ml", {200, 250, 330}}, {"cl", {20, 25, 33}}};
    case Locale::in: return {{"ml", {125, 180, 200, 250}}};
  }
  return {};
}

std::string litres_word(Locale l) { return l == Locale::us ? "Liters" : "Litres"; }

W shades(Locale l) {
  if (l == Locale::eu5) return {"Rose Poudré", "Pêche Dorée", "Corail", "Lilas", "Bordeaux", "Nude Crème"};
  if (l == Locale::in) return {"Gulabi", "Kesari", "Rani Pink", "Coral Rose", "Mehendi Brown", "Peach"};
  return {"Rosy Glow", "Peach Bloom", "Berry Crush", "Warm Nude", "Coral Kiss", "Mauve Dusk"};
}

W colors(Locale l) {
  if (l == Locale::eu5) return {"Bleu Marine", "Vert Olive", "Gris", "Rouge", "Noir Mat"};
  return {"Navy Blue", "Olive Green", "Grey", "Red", "Matte Black", "Teal"};
}

W roasts(Locale l) {
  if (l == Locale::eu5) return {"Café Corsé", "Arabica Doux", "Espresso Intenso", "Décaféiné"};
  if (l == Locale::in) return {"Filter Kaapi", "Chicory Blend", "South Indian Filter", "Coorg Arabica"};
  return {"Original Roast", "Dark Roast", "Breakfast Blend", "French Roast", "Colombian Medium"};
}

W flavors(Locale l) {
  if (l == Locale::eu5) return {"Chocolat", "Vanille", "Fraise", "Café Crème", "Noisette"};
  if (l == Locale::in) return {"Kesar Badam", "Elaichi", "Chocolate", "Mango", "Thandai"};
  return {"Chocolate", "Vanilla", "Strawberry", "Cookies and Cream", "Blueberry"};
}

W fruits(Locale l) {
  if (l == Locale::eu5) return {"Orange Pressée", "Pomme", "Ananas", "Pêche", "Multifruits"};
  if (l == Locale::in) return {"Alphonso Mango", "Guava", "Litchi", "Jamun", "Mixed Fruit"};
  return {"Orange", "Apple", "Cranberry", "Grape", "Pineapple"};
}

std::vector<TemplateSpec> library_for(Locale l) {
  std::vector<TemplateSpec> out;
  auto add = [&](TemplateSpec t) {
    t.locale = l;
    t.words["brand"] = brands(l);
    out.push_back(std::move(t));
  };
  const W beauty_desc{"Dermatologically tested. Suitable for all skin types.", "Cruelty free formula."};
  const W grocery_desc{"Store in a cool and dry place.", "Packed fresh for everyday cooking."};
  const W health_desc{"Consult your doctor before use.", "Keep out of reach of children."};

  // ---- zero spans: count, total one ----
  {
    TemplateSpec t;
    t.name = "lipstick";
    t.categories = {"beauty", "makeup", "lipstick"};
    t.pattern = "{brand} {shade} Matte Lipstick, Long Lasting {finish} Finish";
    t.words = {{"shade", shades(l)}, {"finish", {"Velvet", "Satin", "Creamy", "Powder"}}, {"d", beauty_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "kajal";
    t.categories = {"beauty", "makeup", "kajal"};
    t.pattern = "{brand} Kajal Eye Liner {shade}, Smudge Proof with {hours} Hour Stay";
    t.slots = {number("hours", {8, 12, 16, 24}, false)};
    t.words = {{"shade", {"Jet Black", "Deep Brown", "Charcoal", "Midnight Blue"}}, {"d", beauty_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "hair brush";
    t.categories = {"beauty", "hair care", "accessories"};
    t.pattern = "{brand} {adj} Paddle Hair Brush with Soft Bristles, {color}";
    t.words = {{"adj", {"Detangling", "Cushioned", "Wooden", "Vented"}}, {"color", colors(l)}, {"d", beauty_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "thermometer";
    t.categories = {"health", "devices", "thermometers"};
    t.pattern = "{brand} Digital Thermometer, {secs} Second Fast Reading, {color}";
    t.slots = {number("secs", {10, 15, 30, 60}, false)};
    t.words = {{"color", colors(l)}, {"d", health_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "yoga mat";
    t.categories = {"health", "fitness", "mats"};
    t.pattern = "{brand} Yoga Mat {mm} mm Extra Thick, Non Slip {color}";
    t.slots = {number("mm", {4, 6, 8, 10}, false)};
    t.words = {{"color", colors(l)}, {"d", health_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "storage box";
    t.categories = {"grocery", "kitchen", "storage"};
    t.pattern = "{brand} Stainless Steel {box} with Lid, {color}";
    t.words = {{"box", {"Masala Dabba", "Spice Box", "Lunch Box", "Tiffin Carrier"}}, {"color", colors(l)},
               {"d", grocery_desc}};
    t.description = "{d}";
    add(t);
  }
  // Shared text with "face powder": only the category says it is a single compact.
  const W powder_finish{"Matte", "Dewy", "Shimmer", "Satin"};
  const std::vector<double> compact_weights{4, 5, 6, 7.5, 8, 9};
  {
    TemplateSpec t;
    t.name = "blush";
    t.categories = {"beauty", "makeup", "blushes"};
    t.uom = UoMType::count;
    t.ambiguous = true;
    t.frequency = 2;
    t.pattern = "{brand} {shade} Pressed Powder {bw} g, {finish} Finish";
    t.slots = {number("bw", compact_weights, false)};
    t.words = {{"shade", shades(l)}, {"finish", powder_finish}, {"d", beauty_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "spray bottle";
    t.categories = {"beauty", "accessories", "bottles"};
    t.ambiguous = true;
    t.pattern = "{brand} Empty Refillable Spray Bottle, {cap} ml, {color}";
    t.slots = {number("cap", {30, 50, 100, 200}, false)};
    t.words = {{"color", colors(l)}, {"d", beauty_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "measuring jug";
    t.categories = {"grocery", "kitchen", "tools"};
    t.ambiguous = true;
    t.pattern = "{brand} Glass Measuring Jug {cap} ml with Pour Spout";
    t.slots = {number("cap", {250, 500, 1000}, false)};
    t.words = {{"d", grocery_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "kitchen scale";
    t.categories = {"grocery", "kitchen", "tools"};
    t.ambiguous = true;
    t.pattern = "{brand} Digital Kitchen Scale up to {cap} kg, {color}";
    t.slots = {number("cap", {5, 10, 15}, false)};
    t.words = {{"color", colors(l)}, {"d", grocery_desc}};
    t.description = "{d}";
    add(t);
  }

  // ---- one span ----
  {
    TemplateSpec t;
    t.name = "staple";
    t.categories = {"grocery", "staples", "flours and grains"};
    t.uom = UoMType::weight;
    t.span_count = 1;
    t.pattern = "{brand} {staple} {w}, {adj}";
    t.slots = {measure("w", weight_bulk(l), true)};
    if (l == Locale::in) {
      t.words["staple"] = {"Whole Wheat Atta", "Besan Flour", "Toor Dal", "Sona Masoori Rice", "Chana Dal",
                           "Basmati Rice", "Rava Sooji"};
    } else if (l == Locale::eu5) {
      t.words["staple"] = {"Farine de Blé", "Riz Basmati", "Müsli Croquant", "Pâtes Fusilli", "Lentilles Corail"};
    } else {
      t.words["staple"] = {"Jasmine Rice", "All Purpose Flour", "Rolled Oats", "Brown Sugar", "Quinoa"};
    }
    t.words["adj"] = {"Stone Ground", "Premium Quality", "Farm Fresh", "No Preservatives", "Naturally Aged"};
    t.words["d"] = grocery_desc;
    t.description = "{d}";
    t.frequency = 2;
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "spice";
    t.categories = {"grocery", "staples", "spices"};
    t.uom = UoMType::weight;
    t.span_count = 1;
    t.pattern = "{brand} {spice} Powder {w} Pouch";
    t.slots = {measure("w", weight_spice(l), true)};
    if (l == Locale::in) {
      t.words["spice"] = {"Haldi", "Jeera", "Garam Masala", "Kashmiri Chilli", "Dhania", "Chaat Masala"};
    } else if (l == Locale::eu5) {
      t.words["spice"] = {"Pimentón Dulce", "Curcuma", "Cannella", "Paprika Fumé", "Gingembre"};
    } else {
      t.words["spice"] = {"Smoked Paprika", "Cinnamon", "Garlic", "Cumin", "Onion"};
    }
    t.words["d"] = grocery_desc;
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "face powder";
    t.categories = {"beauty", "makeup", "face powder"};
    t.uom = UoMType::weight;
    t.span_count = 1;
    t.frequency = 1.5;
    t.pattern = "{brand} {shade} Pressed Powder {bw} g, {finish} Finish";
    t.slots = {number("bw", compact_weights, true)};
    t.words = {{"shade", shades(l)}, {"finish", powder_finish}, {"d", beauty_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "coffee bag";
    t.categories = {"grocery", "beverages", "coffee"};
    t.uom = UoMType::weight;
    t.span_count = 1;
    t.pattern = "{brand} {roast} Ground Coffee, {w} Resealable Pack";
    t.slots = {measure("w", weight_small(l), true)};
    t.words = {{"roast", roasts(l)}, {"d", grocery_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "shampoo";
    t.categories = {"beauty", "hair care", "shampoo"};
    t.uom = UoMType::volume;
    t.span_count = 1;
    t.pattern = "{brand} {variant} Shampoo for {hair} Hair, {v}";
    t.slots = {measure("v", volume_bottle(l), true)};
    t.words = {{"variant", {"Argan", "Anti Dandruff", "Herbal", "Keratin Repair", "Onion Seed"}},
               {"hair", {"Dry", "Oily", "Curly", "Frizzy", "All"}},
               {"d", beauty_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "cooking oil";
    t.categories = {"grocery", "staples", "oils"};
    t.uom = UoMType::volume;
    t.span_count = 1;
    t.pattern = "{brand} {oil} {v} Bottle";
    t.slots = {measure("v", volume_bulk(l), true)};
    if (l == Locale::in) {
      t.words["oil"] = {"Kachi Ghani Mustard Oil", "Cold Pressed Groundnut Oil", "Desi Cow Ghee", "Til Oil"};
    } else if (l == Locale::eu5) {
      t.words["oil"] = {"Aceite de Oliva Virgen Extra", "Olio Extra Vergine", "Huile de Tournesol", "Rapsöl"};
    } else {
      t.words["oil"] = {"Extra Virgin Olive Oil", "Canola Oil", "Avocado Oil", "Vegetable Oil"};
    }
    t.words["d"] = grocery_desc;
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "juice";
    t.categories = {"grocery", "beverages", "juice"};
    t.uom = UoMType::volume;
    t.span_count = 1;
    t.pattern = "{brand} {fruit} Juice, No Added Sugar, {v}";
    t.slots = {measure("v", volume_bottle(l), true)};
    t.words = {{"fruit", fruits(l)}, {"d", grocery_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "body lotion";
    t.categories = {"beauty", "skin care", "body lotion"};
    t.uom = UoMType::volume;
    t.span_count = 1;
    t.pattern = "{brand} {variant} Body Lotion with {ing}, {v} Pump";
    t.slots = {measure("v", volume_bottle(l), true)};
    t.words = {{"variant", {"Deep Moisture", "Cocoa Glow", "Aloe Soothing", "Nourishing"}},
               {"ing", {"Shea Butter", "Vitamin E", "Almond Oil", "Aloe Vera"}},
               {"d", beauty_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "multivitamin";
    t.categories = {"health", "vitamins", "multivitamins"};
    t.uom = UoMType::count;
    t.span_count = 1;
    t.pattern = "{brand} Daily Multivitamin for {who}, {c} Tablets";
    t.slots = {number("c", {30, 60, 90, 120, 180}, true)};
    t.words = {{"who", {"Women", "Men", "Kids", "Seniors", "Adults"}}, {"d", health_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "biscuits";
    t.categories = {"grocery", "snacks", "biscuits"};
    t.uom = UoMType::count;
    t.span_count = 1;
    t.pattern = "{brand} {snack} Cookies, Pack of {c}";
    t.slots = {number("c", {3, 4, 6, 8, 10, 12}, true)};
    if (l == Locale::in) {
      t.words["snack"] = {"Nankhatai", "Jeera Butter", "Atta Digestive", "Coconut Crunch"};
    } else if (l == Locale::eu5) {
      t.words["snack"] = {"Sablés Bretons", "Galettes au Beurre", "Speculoos", "Cantuccini"};
    } else {
      t.words["snack"] = {"Oatmeal Raisin", "Chocolate Chip", "Peanut Butter", "Ginger Snap"};
    }
    t.words["d"] = grocery_desc;
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "face masks";
    t.categories = {"health", "personal care", "masks"};
    t.uom = UoMType::count;
    t.span_count = 1;
    t.pattern = "{brand} {layers} Layer Cotton Face Masks, {c} Pieces, {color}";
    t.slots = {number("layers", {2, 3}, false), number("c", {5, 10, 20, 50}, true)};
    t.words = {{"color", colors(l)}, {"d", health_desc}};
    t.description = "{d}";
    add(t);
  }
  // Ambiguous single-span records.
  {
    TemplateSpec t;
    t.name = "coffee pods";
    t.categories = {"grocery", "beverages", "coffee"};
    t.uom = UoMType::count;
    t.span_count = 1;
    t.ambiguous = true;
    t.pattern = "{brand} {roast} Coffee Pods, Caffeinated, {c} ct - {w} Box";
    t.slots = {number("c", {10, 12, 18, 24, 32, 48}, true), measure("w", weight_small(l), false)};
    t.words = {{"roast", roasts(l)}, {"d", grocery_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "vitamin c";
    t.categories = {"health", "vitamins", "vitamin c"};
    t.uom = UoMType::count;
    t.span_count = 1;
    t.ambiguous = true;
    t.pattern = "{brand} Vitamin C {mg} mg with Zinc, {c} Capsules";
    t.slots = {number("mg", {250, 500, 1000}, false), number("c", {30, 60, 90, 120}, true)};
    t.words = {{"d", health_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "milk powder";
    t.categories = {"grocery", "dairy", "milk powder"};
    t.uom = UoMType::weight;
    t.span_count = 1;
    t.ambiguous = true;
    t.pattern = "{brand} Dairy Whitener Milk Powder {w} Pouch, Makes {lit} " + litres_word(l);
    t.slots = {measure("w", weight_small(l), true), number("lit", {4, 5, 8}, false)};
    t.words = {{"d", grocery_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "protein shake";
    t.categories = {"health", "sports nutrition", "shakes"};
    t.uom = UoMType::volume;
    t.span_count = 1;
    t.ambiguous = true;
    t.pattern = "{brand} Protein Shake {flavor}, {v}, {g} g Protein";
    t.slots = {measure("v", volume_small(l), true), number("g", {15, 20, 25, 30}, false)};
    t.words = {{"flavor", flavors(l)}, {"d", health_desc}};
    t.description = "{d}";
    add(t);
  }

  // ---- two spans ----
  {
    TemplateSpec t;
    t.name = "canister pack";
    t.categories = {"grocery", "beverages", "coffee"};
    t.uom = UoMType::weight;
    t.span_count = 2;
    t.pattern = "{brand} {roast} Medium Ground Coffee, {w} Canister ({c} Pack)";
    t.slots = {measure("w", weight_bulk(l), true), number("c", {2, 3, 4}, true)};
    t.words = {{"roast", roasts(l)}, {"d", grocery_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "multipack pouch";
    t.categories = {"grocery", "snacks", "namkeen"};
    t.uom = UoMType::weight;
    t.span_count = 2;
    t.pattern = "{brand} {snack} {c} x {w} Pouch";
    t.slots = {number("c", {2, 3, 4, 6}, true), measure("w", weight_small(l), true)};
    if (l == Locale::in) {
      t.words["snack"] = {"Aloo Bhujia", "Khatta Meetha", "Moong Dal Namkeen", "Navratan Mixture"};
    } else if (l == Locale::eu5) {
      t.words["snack"] = {"Chips Paprika", "Bretzels Salés", "Cacahuètes Grillées", "Mélange Apéritif"};
    } else {
      t.words["snack"] = {"Trail Mix", "Sea Salt Pretzels", "Honey Roasted Peanuts", "Veggie Straws"};
    }
    t.words["d"] = grocery_desc;
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "churna total";
    t.categories = {"health", "ayurveda", "powders"};
    t.uom = UoMType::weight;
    t.span_count = 2;
    t.pattern = "{brand} {churna} Powder for Digestion, {w} (Pack of {c}), (total {tot})";
    t.slots = {measure("w", weight_spice(l), true), number("c", {2, 3}, true), derived("tot", {"w", "c"})};
    t.words = {{"churna", {"Panchkol", "Triphala", "Hingvastak", "Avipattikar"}}, {"d", health_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "sanitizer each";
    t.categories = {"health", "personal care", "hand sanitizer"};
    t.uom = UoMType::volume;
    t.span_count = 2;
    t.pattern = "{brand} Hand Sanitizer with {h} Hour Germ Protection {scent} - {tot} (pack of {c}), ({v} each)";
    t.slots = {number("h", {8, 12, 24}, false), number("c", {2, 3, 4}, true),
               measure("v", volume_small(l), true), derived("tot", {"v", "c"})};
    t.words = {{"scent", {"Lemon", "Aloe", "Neem", "Lavender"}}, {"d", health_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "paper towels";
    t.categories = {"grocery", "household", "paper"};
    t.uom = UoMType::count;
    t.span_count = 2;
    t.pattern = "{brand} Kitchen Paper Towels, {c1} Packs of {c2} Rolls";
    t.slots = {number("c1", {2, 3, 4, 6}, true), number("c2", {2, 4, 6, 8}, true)};
    t.words = {{"d", grocery_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "granola bars";
    t.categories = {"grocery", "snacks", "bars"};
    t.uom = UoMType::count;
    t.span_count = 2;
    t.ambiguous = true;
    t.pattern = "{brand} {flavor} Granola Bars {g} g, {c1} x {c2} Pack";
    t.slots = {number("g", {25, 35, 40, 45}, false), number("c1", {2, 3, 4}, true),
               number("c2", {5, 6, 8}, true)};
    t.words = {{"flavor", flavors(l)}, {"d", grocery_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "shake multipack";
    t.categories = {"health", "sports nutrition", "shakes"};
    t.uom = UoMType::volume;
    t.span_count = 2;
    t.ambiguous = true;
    t.pattern = "{brand} Protein Shake {flavor}, {c} x {v}, {g} g Protein Each";
    t.slots = {number("c", {4, 6, 12}, true), measure("v", volume_small(l), true),
               number("g", {15, 20, 25, 30}, false)};
    t.words = {{"flavor", flavors(l)}, {"d", health_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "milk powder multipack";
    t.categories = {"grocery", "dairy", "milk powder"};
    t.uom = UoMType::weight;
    t.span_count = 2;
    t.ambiguous = true;
    t.pattern = "{brand} Milk Powder {c} x {w} Pouch, Each Makes {lit} " + litres_word(l);
    t.slots = {number("c", {2, 3, 4}, true), measure("w", weight_small(l), true), number("lit", {4, 5, 8}, false)};
    t.words = {{"d", grocery_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "creatine extra";
    t.categories = {"health", "sports nutrition", "creatine"};
    t.uom = UoMType::weight;
    t.span_count = 2;
    t.additive = true;
    t.frequency = 0.5;
    t.pattern = "{brand} Creatine Monohydrate Micronized - {w1} g ({flavor} Flavor), {mg} mg Amino Powder, {w2} g extra";
    t.slots = {number("w1", {100, 200, 250, 300}, true), number("mg", {3000, 5000}, false),
               number("w2", {50, 100}, true)};
    t.words = {{"flavor", flavors(l)}, {"d", health_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "shampoo bonus";
    t.categories = {"beauty", "hair care", "shampoo"};
    t.uom = UoMType::volume;
    t.span_count = 2;
    t.additive = true;
    t.frequency = 0.5;
    t.pattern = "{brand} {variant} Shampoo {v1} ml + {v2} ml Free";
    t.slots = {number("v1", {180, 340, 400, 650}, true), number("v2", {60, 80, 100}, true)};
    t.words = {{"variant", {"Argan", "Anti Dandruff", "Herbal", "Keratin Repair"}}, {"d", beauty_desc}};
    t.description = "{d}";
    add(t);
  }

  // ---- three spans ----
  {
    TemplateSpec t;
    t.name = "juice boxes";
    t.categories = {"grocery", "beverages", "juice"};
    t.uom = UoMType::volume;
    t.span_count = 3;
    t.pattern = "{brand} {fruit} Juice Boxes, {c1} x {c2} x {v}";
    t.slots = {number("c1", {2, 3, 4}, true), number("c2", {4, 6}, true), measure("v", volume_small(l), true)};
    t.words = {{"fruit", fruits(l)}, {"d", grocery_desc}};
    t.description = "{d}";
    add(t);
  }
  {
    TemplateSpec t;
    t.name = "tea bags";
    t.categories = {"grocery", "beverages", "tea"};
    t.uom = UoMType::weight;
    t.span_count = 3;
    t.pattern = "{brand} {tea} Tea, {c1} Packs x {c2} Tea Bags x {w} g";
    t.slots = {number("c1", {2, 3, 4}, true), number("c2", {20, 25, 50}, true), number("w", {1.5, 2, 2.5}, true)};
    t.words = {{"tea", {"Masala Chai", "Green", "Chamomile", "Earl Grey", "Tulsi Ginger"}}, {"d", grocery_desc}};
    t.description = "{d}";
    add(t);
  }
  return out;
}

}  // namespace

const std::vector<TemplateSpec>& template_library() {
  static const std::vector<TemplateSpec> lib = [] {
    std::vector<TemplateSpec> all;
    for (Locale l : {Locale::us, Locale::eu5, Locale::in}) {
      auto part = library_for(l);
      for (auto& t : part) {
        t.validate();
        all.push_back(std::move(t));
      }
    }
    return all;
  }();
  return lib;
}

}  // namespace ppu
