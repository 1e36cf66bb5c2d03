#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace ppu {

enum class UoMType { weight = 0, volume = 1, count = 2 };

inline constexpr std::array<UoMType, 3> kAllUoMTypes = {UoMType::weight, UoMType::volume, UoMType::count};

std::string_view to_string(UoMType t);
// Throws std::invalid_argument for anything but "weight", "volume", "count".
UoMType parse_uom(std::string_view s);
inline int uom_index(UoMType t) { return static_cast<int>(t); }

struct GoldTotal {
  double value = 0;
  std::string unit;  // "count" for count products

  bool operator==(const GoldTotal&) const = default;
};

struct ProductRecord {
  std::string id;
  // Ordered attribute name -> UTF-8 text (title, description, bullet_points, ocr_text, ...).
  std::vector<std::pair<std::string, std::string>> attributes;
  // Taxonomy path, coarse to fine: category, browse node, sub-category.
  std::vector<std::string> categories;
  std::optional<UoMType> gold_uom;
  std::optional<GoldTotal> gold_total;

  const std::string* attribute(std::string_view name) const;
  std::string* attribute(std::string_view name);
  void set_attribute(const std::string& name, std::string text);

  bool operator==(const ProductRecord&) const = default;
};

// Character span [start, end) in code points inside one attribute.
struct GoldSpan {
  std::string attribute;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const GoldSpan&) const = default;
  auto operator<=>(const GoldSpan&) const = default;
};

// Sidecar file: record id -> spans.
using SpanMap = std::map<std::string, std::vector<GoldSpan>>;

nlohmann::ordered_json record_to_json(const ProductRecord& r);
// Throws DataError describing the first schema violation.
ProductRecord record_from_json(const nlohmann::ordered_json& j);

// One JSON object per line; blank lines skipped. Errors name the line number.
std::vector<ProductRecord> load_jsonl(const std::filesystem::path& path);
std::vector<ProductRecord> parse_jsonl(std::string_view text);
void write_jsonl(const std::vector<ProductRecord>& records, const std::filesystem::path& path);
std::string to_jsonl(const std::vector<ProductRecord>& records);

// Sidecar lines: {"id": ..., "spans": [{"attribute", "start", "end"}, ...]}.
// Records with an entry but no spans are written with an empty list.
void write_span_sidecar(const std::vector<std::pair<std::string, std::vector<GoldSpan>>>& rows,
                        const std::filesystem::path& path);
std::string span_sidecar_text(const std::vector<std::pair<std::string, std::vector<GoldSpan>>>& rows);
SpanMap load_span_sidecar(const std::filesystem::path& path);

}  // namespace ppu
