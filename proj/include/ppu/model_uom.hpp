// Character-CNN UoM type classifier.

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "ppu/checkpoint.hpp"
#include "ppu/params.hpp"
#include "ppu/record.hpp"
#include "ppu/vocab.hpp"

namespace ppu {

// Shared category vocabulary for all taxonomy levels; index 0 is unknown.
class CategoryVocab {
 public:
  CategoryVocab() = default;
  explicit CategoryVocab(std::vector<std::string> names);
  static CategoryVocab build(const std::vector<ProductRecord>& records);

  int index_of(const std::string& name) const;
  std::size_t size() const { return names_.size() + 1; }  // including unknown
  std::size_t known() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

// ceil(sqrt(M)) with a floor of 4.
std::size_t category_embedding_dim(std::size_t category_count);

struct UoMClassifierConfig {
  std::size_t embed_dim = 16;
  std::vector<std::size_t> widths{3, 5, 3};
  std::size_t channels = 32;
  std::size_t pool_window = 2;
  std::size_t key_dim = 16;
  std::size_t hidden = 32;
  std::size_t category_levels = 3;
  std::size_t category_dim = 0;  // 0: derived from the vocabulary size
  bool use_categories = true;
  bool short_text = true;
  bool use_batch_norm = false;
  double dropout = 0.1;
  std::size_t max_len_title = 256;
  std::size_t max_len_other = 512;
  std::vector<std::string> long_attributes{"description", "bullet_points", "ocr_text"};

  nlohmann::json to_json() const;
  static UoMClassifierConfig from_json(const nlohmann::json& j);
  void validate() const;
};

struct UoMInput {
  std::vector<std::vector<int>> attributes;  // encoded ids per attribute (title first)
  std::vector<int> categories;               // one id per taxonomy level
};

struct UoMPrediction {
  std::array<double, 3> probs{};
  UoMType predicted = UoMType::count;
  double confidence = 0;
};

UoMPrediction prediction_from_probs(std::span<const tensor::Real> probs);

class UoMClassifier {
 public:
  UoMClassifier(UoMClassifierConfig config, CategoryVocab categories, std::uint64_t seed);
  // Throws CheckpointError on a kind or vocabulary mismatch.
  explicit UoMClassifier(const Checkpoint& checkpoint);

  Checkpoint to_checkpoint() const;

  UoMInput prepare(const ProductRecord& record) const;
  std::vector<std::string> attribute_names(const ProductRecord& record) const;

  // [channels] vector; an empty sequence gives zeros.
  tensor::Tensor attribute_encode(std::span<const int> ids, bool training, std::mt19937_64* rng) const;
  // encodings [m x channels] -> [channels]; attention weights out if requested.
  tensor::Tensor attention_pool(const tensor::Tensor& encodings, std::vector<double>* weights = nullptr) const;
  // [levels * category_dim]
  tensor::Tensor embed_categories(std::span<const int> ids) const;

  // Class probabilities [3] (weight, volume, count).
  tensor::Tensor forward(const UoMInput& input, bool training, std::mt19937_64* rng) const;
  UoMPrediction predict(const ProductRecord& record) const;

  const UoMClassifierConfig& config() const { return config_; }
  const CategoryVocab& categories() const { return categories_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  std::size_t category_dim() const { return category_dim_; }

 private:
  void init(std::uint64_t seed);
  tensor::Tensor normalize(const tensor::Tensor& x, const std::string& prefix, bool training) const;

  UoMClassifierConfig config_;
  CategoryVocab categories_;
  std::size_t category_dim_ = 4;
  mutable ParamStore params_;
};

}  // namespace ppu
