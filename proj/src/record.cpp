#include "ppu/record.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ppu/errors.hpp"

namespace ppu {

using nlohmann::ordered_json;

std::string_view to_string(UoMType t) {
  switch (t) {
    case UoMType::weight:
      return "weight";
    case UoMType::volume:
      return "volume";
    case UoMType::count:
      return "count";
  }
  return "count";
}

UoMType parse_uom(std::string_view s) {
  if (s == "weight") return UoMType::weight;
  if (s == "volume") return UoMType::volume;
  if (s == "count") return UoMType::count;
  throw std::invalid_argument("unknown UoM type '" + std::string(s) + "'");
}

const std::string* ProductRecord::attribute(std::string_view name) const {
  for (const auto& [k, v] : attributes)
    if (k == name) return &v;
  return nullptr;
}

std::string* ProductRecord::attribute(std::string_view name) {
  for (auto& [k, v] : attributes)
    if (k == name) return &v;
  return nullptr;
}

void ProductRecord::set_attribute(const std::string& name, std::string text) {
  if (auto* existing = attribute(name)) {
    *existing = std::move(text);
  } else {
    attributes.emplace_back(name, std::move(text));
  }
}

ordered_json record_to_json(const ProductRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  ordered_json attrs = ordered_json::object();
  for (const auto& [k, v] : r.attributes) attrs[k] = v;
  j["attributes"] = attrs;
  j["categories"] = r.categories;
  if (r.gold_uom) j["gold_uom"] = std::string(to_string(*r.gold_uom));
  if (r.gold_total) j["gold_total"] = ordered_json{{"value", r.gold_total->value}, {"unit", r.gold_total->unit}};
  return j;
}

ProductRecord record_from_json(const ordered_json& j) {
  if (!j.is_object()) throw DataError("record must be a JSON object");
  ProductRecord r;
  if (!j.contains("id") || !j["id"].is_string()) throw DataError("field 'id' must be a string");
  r.id = j["id"].get<std::string>();
  if (!j.contains("attributes") || !j["attributes"].is_object()) throw DataError("field 'attributes' must be an object");
  std::set<std::string> seen;
  for (const auto& [k, v] : j["attributes"].items()) {
    if (!v.is_string()) throw DataError("attribute '" + k + "' must be a string");
    if (!seen.insert(k).second) throw DataError("duplicate attribute '" + k + "'");
    r.attributes.emplace_back(k, v.get<std::string>());
  }
  if (j.contains("categories")) {
    if (!j["categories"].is_array()) throw DataError("field 'categories' must be an array");
    for (const auto& c : j["categories"]) {
      if (!c.is_string()) throw DataError("categories must be strings");
      r.categories.push_back(c.get<std::string>());
    }
  }
  if (j.contains("gold_uom") && !j["gold_uom"].is_null()) {
    if (!j["gold_uom"].is_string()) throw DataError("field 'gold_uom' must be a string");
    try {
      r.gold_uom = parse_uom(j["gold_uom"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what());
    }
  }
  if (j.contains("gold_total") && !j["gold_total"].is_null()) {
    const auto& g = j["gold_total"];
    if (!g.is_object() || !g.contains("value") || !g["value"].is_number() || !g.contains("unit") ||
        !g["unit"].is_string()) {
      throw DataError("field 'gold_total' must be {\"value\": number, \"unit\": string}");
    }
    GoldTotal t{g["value"].get<double>(), g["unit"].get<std::string>()};
    if (!(t.value > 0) || !std::isfinite(t.value)) {
      throw DataError("gold_total.value must be positive, got " + g["value"].dump());
    }
    r.gold_total = t;
  }
  return r;
}

std::vector<ProductRecord> parse_jsonl(std::string_view text) {
  std::vector<ProductRecord> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(record_from_json(ordered_json::parse(line)));
    } catch (const ordered_json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

std::vector<ProductRecord> load_jsonl(const std::filesystem::path& path) { return parse_jsonl(read_file(path)); }

std::string to_jsonl(const std::vector<ProductRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const std::vector<ProductRecord>& records, const std::filesystem::path& path) {
  write_file(path, to_jsonl(records));
}

std::string span_sidecar_text(const std::vector<std::pair<std::string, std::vector<GoldSpan>>>& rows) {
  std::string out;
  for (const auto& [id, spans] : rows) {
    ordered_json j;
    j["id"] = id;
    ordered_json list = ordered_json::array();
    for (const auto& s : spans) list.push_back({{"attribute", s.attribute}, {"start", s.start}, {"end", s.end}});
    j["spans"] = list;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_span_sidecar(const std::vector<std::pair<std::string, std::vector<GoldSpan>>>& rows,
                        const std::filesystem::path& path) {
  write_file(path, span_sidecar_text(rows));
}

SpanMap load_span_sidecar(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  SpanMap out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = ordered_json::parse(line);
      std::vector<GoldSpan> spans;
      for (const auto& s : j.at("spans")) {
        GoldSpan g{s.at("attribute").get<std::string>(), s.at("start").get<std::size_t>(),
                   s.at("end").get<std::size_t>()};
        if (g.end <= g.start) throw DataError("span end must exceed start");
        spans.push_back(std::move(g));
      }
      out[j.at("id").get<std::string>()] = std::move(spans);
    } catch (const ordered_json::exception& e) {
      throw DataError("span sidecar line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("span sidecar line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ppu
